#include "oaisim/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "oaisim/error.hpp"
#include "oaisim/oai_xml.hpp"
#include "oaisim/timefmt.hpp"

namespace oaisim {

namespace fs = std::filesystem;

IndexReport index_store(RecordStore& store, const TextPipeline& pipeline) {
    IndexReport report;
    for (const auto& id : store.list_identifiers()) {
        const auto record = store.get_record(id);
        store.put_tf(id, pipeline.run(record));
        ++report.records;
        if (record.deleted) ++report.deleted;
    }
    return report;
}

std::string format_top_k(std::span<const SimilarityMatch> matches) {
    std::string out;
    for (const auto& m : matches) out += m.identifier + "\t" + format_score(m.score) + "\n";
    return out;
}

ComputeReport compute_similarities(RecordStore& store, const ComputeOptions& options) {
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    ComputeReport report;
    report.computed_at = options.computed_at.value_or(utc_now());
    const auto epoch = store.begin_compute();

    std::vector<TermFrequencyVector> tfs;
    std::vector<std::string> deleted;
    for (const auto& id : store.list_identifiers()) {
        auto tf = store.get_tf(id);
        if (store.summary(id)->deleted)
            deleted.push_back(id);
        else
            tfs.push_back(std::move(tf));
    }

    std::vector<WeightedVector> vectors;
    vectors.reserve(tfs.size());
    if (!tfs.empty()) {
        const auto stats = collection_stats(tfs);
        for (const auto& tf : tfs) {
            vectors.push_back(weight_vector(tf, stats));
            store.put_weights(tf.identifier, vectors.back());
        }
    }
    for (const auto& id : deleted) store.put_weights(id, WeightedVector{id, {}, 0.0});

    const WeightedCorpus corpus(std::move(vectors));
    report.documents = corpus.size();

    const auto sim_path = store.layout().similarities();
    const fs::path sim_tmp = sim_path.string() + ".tmp";
    TopKCollector collector(corpus.size(), options.k);
    {
        std::ofstream out(sim_tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + sim_tmp.string());
        PairOptions pair_options;
        pair_options.jobs = options.jobs;
        pair_options.isa = options.isa;
        const auto loop_started = clock::now();
        std::string line;
        report.pairs = all_pairs(corpus, pair_options, [&](const IndexPair& p) {
            collector.offer(p);
            if (p.score < options.floor) return;
            line.clear();
            line += corpus.identifier(p.a);
            line += '\t';
            line += corpus.identifier(p.b);
            line += '\t';
            line += format_score(p.score);
            line += '\n';
            out.write(line.data(), static_cast<std::streamsize>(line.size()));
            ++report.pairs_written;
        });
        report.pair_loop_seconds = std::chrono::duration<double>(clock::now() - loop_started).count();
        out.flush();
        if (!out) throw StorageError("short write to " + sim_tmp.string());
    }
    std::error_code ec;
    fs::rename(sim_tmp, sim_path, ec);
    if (ec) throw StorageError("cannot rename into " + sim_path.string() + ": " + ec.message());

    const auto top_dir = store.layout().top_k();
    fs::remove_all(top_dir, ec);
    fs::create_directories(top_dir, ec);
    if (ec) throw StorageError("cannot create " + top_dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::vector<SimilarityMatch> matches;
        for (const auto& [other, score] : collector.best(i)) matches.push_back({corpus.identifier(other), score});
        const auto about = build_similarity_about(corpus.identifier(i), matches, options.k, report.computed_at);
        write_file_atomic(top_dir / top_k_file_name(corpus.identifier(i)), format_top_k(about.matches));
    }

    store.finish_compute(epoch, report.computed_at);
    report.fresh = store.derived_state() == DerivedState::fresh;
    report.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();
    return report;
}

}  // namespace oaisim
