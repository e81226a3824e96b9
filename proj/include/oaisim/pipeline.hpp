#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "oaisim/record_store.hpp"
#include "oaisim/similarity.hpp"
#include "oaisim/text_pipeline.hpp"

namespace oaisim {

struct IndexReport {
    std::uint64_t records = 0;
    std::uint64_t deleted = 0;
};

/// Writes a tf file for every record; deleted records get an empty one.
IndexReport index_store(RecordStore& store, const TextPipeline& pipeline = TextPipeline());

struct ComputeOptions {
    std::size_t k = 10;
    /// Pairs scoring below this are left out of similarities.txt. top_k files are unaffected.
    double floor = 0.0;
    unsigned jobs = 1;
    kernels::Isa isa = kernels::preferred();
    /// computedDate stamp; defaults to the current time.
    std::optional<std::string> computed_at;
};

struct ComputeReport {
    std::uint64_t documents = 0;
    std::uint64_t pairs = 0;
    std::uint64_t pairs_written = 0;
    double wall_seconds = 0.0;
    double pair_loop_seconds = 0.0;
    std::string computed_at;
    /// False if the corpus changed while computing; outputs stay marked stale.
    bool fresh = false;

    double mean_per_pair_seconds() const { return pairs ? wall_seconds / static_cast<double>(pairs) : 0.0; }
};

/// Rebuilds the weights tree, similarities.txt and the top_k directory from the tf tree.
/// Throws NotFound when a record has no tf file.
ComputeReport compute_similarities(RecordStore& store, const ComputeOptions& options = {});

/// "identifier<TAB>score" lines, best first.
std::string format_top_k(std::span<const SimilarityMatch> matches);

}  // namespace oaisim
