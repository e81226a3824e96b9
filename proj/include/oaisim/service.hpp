#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oaisim/oai_xml.hpp"
#include "oaisim/record_store.hpp"
#include "oaisim/similarity.hpp"
#include "oaisim/url.hpp"

namespace httplib {
class Server;
}

namespace oaisim {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 8080;
    std::string repository_name = "oaisim similarity aggregator";
    /// Public base URL of the OAI-PMH endpoint, echoed in every response.
    std::string base_url = "http://localhost:8080/oai";
    std::vector<std::string> admin_emails{"admin@localhost.localdomain"};
    std::size_t k = 10;
    std::filesystem::path store_root = "store";
    std::size_t page_size = 100;
    std::string oai_path = "/oai";
    std::string schema_path = "/schema/similarity";
    std::string similar_path = "/similar";

    /// Absolute URL of the similarity schema, derived from base_url and schema_path.
    std::string schema_url() const;
};

/// Applies one `key = value` setting. Throws ValidationError on an unknown key or bad value.
void apply_setting(ServiceConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment. `admin_email` may repeat.
ServiceConfig parse_config(std::string_view text);
ServiceConfig load_config(const std::filesystem::path& path);

/// Names accepted by apply_setting.
const std::vector<std::string_view>& config_keys();

/// Cursor state carried inside a resumption token.
struct ListState {
    std::uint64_t epoch = 0;
    std::uint64_t cursor = 0;
    std::string metadata_prefix;
    ListFilter filter;
    bool operator==(const ListState&) const = default;
};

std::string encode_resumption_token(const ListState& state);
/// nullopt for anything encode_resumption_token did not produce.
std::optional<ListState> decode_resumption_token(std::string_view token);

struct HttpReply {
    int status = 200;
    std::string content_type = "text/xml; charset=utf-8";
    std::string body;
};

struct DuplicateEntry {
    std::string id_a;
    std::string id_b;
    double score = 0.0;
    /// One record's provenance names the other's identifier, or both share an origin base URL.
    bool provenance_linked = false;
};

/// Pairs scoring >= threshold, score-descending. Throws StaleError without fresh weights.
std::vector<DuplicateEntry> duplicate_report(const RecordStore& store, double threshold, unsigned jobs = 1);

/// Read-only OAI-PMH data provider over a record store. Handlers share an
/// immutable snapshot that is swapped atomically when the store changes.
class AggregatorService {
public:
    explicit AggregatorService(ServiceConfig config);

    const ServiceConfig& config() const { return config_; }

    /// OAI-PMH dispatch on the verb argument. Protocol errors are 200 replies with `<error>`.
    HttpReply handle_request(const QueryArgs& args);
    /// Standalone similarity container for ?identifier=...&k=...
    HttpReply handle_similar(const QueryArgs& args);
    HttpReply serve_similarity_schema() const;

    /// Rebuilds the snapshot if the store's epoch or derived state moved.
    void refresh();
    void reload();

    /// Registers GET/POST handlers on `server`.
    void mount(httplib::Server& server);

    bool has_similarity() const;
    std::uint64_t epoch() const;

private:
    struct Snapshot {
        std::uint64_t epoch = 0;
        DerivedState state = DerivedState::absent;
        std::optional<std::string> computed_at;
        SummaryIndex summaries;
        std::map<std::string, MetadataRecord, std::less<>> records;
        std::optional<WeightedCorpus> corpus;
    };

    std::shared_ptr<const Snapshot> current() const;
    std::shared_ptr<const Snapshot> build_snapshot() const;
    ResponseHeader header_for(const QueryArgs& args) const;
    HttpReply error_reply(const QueryArgs& args, OaiErrorCode code, std::string message) const;
    HttpReply list(const Snapshot& snap, const QueryArgs& args, Verb verb);

    ServiceConfig config_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
};

}  // namespace oaisim
