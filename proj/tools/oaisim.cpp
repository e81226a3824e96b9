// oaisim: harvest | index | compute | top | serve | estimate | dup-report

#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "oaisim/error.hpp"
#include "oaisim/harvester.hpp"
#include "oaisim/oai_xml.hpp"
#include "oaisim/pipeline.hpp"
#include "oaisim/record_store.hpp"
#include "oaisim/service.hpp"
#include "oaisim/similarity.hpp"
#include "oaisim/text_pipeline.hpp"
#include "oaisim/timefmt.hpp"

using namespace oaisim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitStale = 3;

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::string flag_name(std::string_view key) {
    std::string out = "--";
    for (char c : key) out += c == '_' ? '-' : c;
    return out;
}

struct Settings {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    ServiceConfig resolve() const {
        ServiceConfig config = config_path.empty() ? ServiceConfig{} : load_config(config_path);
        for (const auto& [key, value] : overrides) apply_setting(config, key, value);
        return config;
    }
};

void add_settings(CLI::App& app, Settings& settings) {
    app.add_option("--config", settings.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    for (const auto key : config_keys()) {
        const std::string name = flag_name(key) + (key == "store_root" ? ",--store" : "");
        app.add_option_function<std::string>(
            name, [&settings, key = std::string(key)](const std::string& v) { settings.overrides[key] = v; },
            "overrides " + std::string(key));
    }
}

void print_report(const HarvestReport& r) {
    std::cout << "records received: " << r.records_received << "\n"
              << "pages fetched: " << r.pages_fetched << "\n"
              << "retries: " << r.retries << "\n"
              << "duplicate identifiers: " << r.duplicate_identifiers.size() << "\n"
              << "collisions: " << r.collisions.size() << "\n";
    for (const auto& c : r.collisions) std::cout << "  collision " << c.identifier << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OAI-PMH aggregator with tf-idf similarity lists"};
    app.require_subcommand(1);
    app.fallthrough();

    Settings settings;
    add_settings(app, settings);
    unsigned default_jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* harvest_cmd = app.add_subcommand("harvest", "harvest ListRecords from an upstream provider into the store");
    std::string base_url;
    std::optional<std::string> from, until, set, from_header;
    harvest_cmd->add_option("--base-url", base_url, "upstream OAI-PMH base URL")->required();
    harvest_cmd->add_option("--from", from);
    harvest_cmd->add_option("--until", until);
    harvest_cmd->add_option("--set", set);
    harvest_cmd->add_option("--contact", from_header, "sent as the HTTP From header");

    auto* index_cmd = app.add_subcommand("index", "write term frequencies for every record");
    std::string fields = "title,description,subject,creator";
    std::string stopwords_path;
    index_cmd->add_option("--fields", fields, "comma-separated Dublin Core elements");
    index_cmd->add_option("--stopwords", stopwords_path, "stopword file, one word per line")->check(CLI::ExistingFile);

    auto* compute_cmd = app.add_subcommand("compute", "weights, similarities.txt and top-k lists");
    double floor = 0.0;
    unsigned jobs = default_jobs;
    std::string isa_name;
    compute_cmd->add_option("--floor", floor, "omit pairs scoring below this from similarities.txt")
        ->check(CLI::Range(0.0, 1.0));
    compute_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
    compute_cmd->add_option("--isa", isa_name, "scalar, avx2 or neon")->check(CLI::IsMember({"scalar", "avx2", "neon"}));

    auto* top_cmd = app.add_subcommand("top", "ranked matches for one identifier");
    std::string identifier;
    std::optional<std::size_t> top_k_arg;
    top_cmd->add_option("--identifier", identifier)->required();
    top_cmd->add_option("-n,--count", top_k_arg, "number of matches (default: k)")->check(CLI::PositiveNumber);

    auto* serve_cmd = app.add_subcommand("serve", "run the OAI-PMH data provider");

    auto* estimate_cmd = app.add_subcommand("estimate", "projected all-pairs runtime");
    std::uint64_t n = 0;
    double per_pair = kPaperPerPairSeconds;
    estimate_cmd->add_option("--n", n, "number of records")->required();
    estimate_cmd->add_option("--per-pair", per_pair, "seconds per pair")->check(CLI::NonNegativeNumber);

    auto* dup_cmd = app.add_subcommand("dup-report", "pairs at or above a threshold");
    double threshold = 0.9;
    dup_cmd->add_option("--threshold", threshold)->required();
    dup_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const ServiceConfig config = settings.resolve();

        if (*estimate_cmd) {
            const double seconds = estimate_runtime(n, per_pair);
            std::cout << format_approximate(seconds) << "\n"
                      << "pairs: " << pair_count(n) << "\n"
                      << "duration: " << format_duration(seconds) << "\n"
                      << "total seconds: " << split_duration(seconds).total_seconds() << "\n";
            return kExitOk;
        }

        RecordStore store(config.store_root);

        if (*harvest_cmd) {
            HarvestSession session;
            session.base_url = base_url;
            session.from = from;
            session.until = until;
            session.set = set;
            HarvestOptions options;
            options.from_header = from_header;
            try {
                print_report(harvest(session, store_sink(store, base_url, utc_now()), options));
            } catch (const HarvestError& e) {
                print_report(e.partial());
                std::cerr << "oaisim: harvest failed: " << e.what();
                if (e.cursor()) std::cerr << " (resume after token " << *e.cursor() << ")";
                std::cerr << "\n";
                return kExitRuntime;
            }
            return kExitOk;
        }

        if (*index_cmd) {
            const auto stopwords = stopwords_path.empty() ? Stopwords::defaults() : Stopwords::from_file(stopwords_path);
            const auto report = index_store(store, TextPipeline(FieldSelection::parse(fields), Tokenizer(stopwords)));
            std::cout << "indexed " << report.records << " records (" << report.deleted << " deleted)\n";
            return kExitOk;
        }

        if (*compute_cmd) {
            ComputeOptions options;
            options.k = config.k;
            options.floor = floor;
            options.jobs = jobs;
            if (!isa_name.empty()) {
                const auto isa = isa_name == "avx2" ? kernels::Isa::avx2
                                 : isa_name == "neon" ? kernels::Isa::neon
                                                      : kernels::Isa::scalar;
                if (!kernels::supported(isa)) throw ValidationError(isa_name + " is not supported on this CPU");
                options.isa = isa;
            }
            const auto r = compute_similarities(store, options);
            std::printf("documents: %llu\n", static_cast<unsigned long long>(r.documents));
            std::printf("pairs: %llu\n", static_cast<unsigned long long>(r.pairs));
            std::printf("pairs written: %llu\n", static_cast<unsigned long long>(r.pairs_written));
            std::printf("wall time: %.6f s\n", r.wall_seconds);
            std::printf("mean per pair: %.9f s\n", r.mean_per_pair_seconds());
            if (!r.fresh) {
                std::cerr << "oaisim: records changed during compute; run compute again\n";
                return kExitStale;
            }
            return kExitOk;
        }

        if (*top_cmd) {
            if (!store.contains(identifier)) throw NotFound("no record " + identifier);
            const auto corpus = load_weighted_corpus(store);
            const std::size_t k = top_k_arg.value_or(config.k);
            const auto about = build_similarity_about(identifier, top_k(corpus, identifier, k), k,
                                                      store.computed_at().value_or(utc_now()));
            std::size_t rank = 0;
            for (const auto& m : about.matches) std::cout << ++rank << "\t" << format_score(m.score) << "\t" << m.identifier << "\n";
            return kExitOk;
        }

        if (*serve_cmd) {
            AggregatorService service(config);
            httplib::Server server;
            service.mount(server);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving " << config.base_url << " on " << config.bind_address << ":" << config.port
                      << (service.has_similarity() ? "" : " (no similarity data; run compute)") << std::endl;
            if (!server.listen(config.bind_address, config.port)) {
                std::cerr << "oaisim: cannot listen on " << config.bind_address << ":" << config.port << "\n";
                return kExitRuntime;
            }
            return kExitOk;
        }

        if (*dup_cmd) {
            for (const auto& e : duplicate_report(store, threshold, jobs))
                std::cout << format_score(e.score) << "\t" << e.id_a << "\t" << e.id_b
                          << (e.provenance_linked ? "\tprovenance-linked" : "") << "\n";
            return kExitOk;
        }
    } catch (const StaleError& e) {
        std::cerr << "oaisim: " << e.what() << "\n";
        return kExitStale;
    } catch (const ValidationError& e) {
        std::cerr << "oaisim: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "oaisim: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
