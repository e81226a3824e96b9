#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oaisim/error.hpp"
#include "oaisim/record.hpp"
#include "oaisim/url.hpp"

namespace oaisim {

class RecordStore;

struct HarvestSession {
    std::string base_url;
    std::string metadata_prefix = "oai_dc";
    std::optional<std::string> from;
    std::optional<std::string> until;
    std::optional<std::string> set;
    std::optional<std::string> cursor;  // resumption token of the next page
    std::uint64_t records_received = 0;
};

/// Throws ValidationError on a non-http base URL, unparseable dates or from > until.
void validate(const HarvestSession& session);

/// Base URL plus a query string for `verb`. A resumption token must be the only
/// argument besides the verb. Throws ValidationError on an illegal combination.
std::string build_request_url(const HarvestSession& session, Verb verb, const QueryArgs& arguments);

enum class IngestStatus { created, unchanged, replaced };

struct IngestResult {
    IngestStatus status = IngestStatus::created;
    /// The identifier was already held from a different origin.
    bool collision = false;
    std::vector<std::string> previous_provenance;
    std::vector<std::string> stored_provenance;
};

using RecordSink = std::function<IngestResult(const MetadataRecord&)>;

struct Collision {
    std::string identifier;
    std::vector<std::string> previous_provenance;
    std::vector<std::string> incoming_provenance;
};

struct HarvestReport {
    std::uint64_t records_received = 0;
    std::uint64_t pages_fetched = 0;
    std::uint64_t retries = 0;
    std::vector<std::string> duplicate_identifiers;  // repeated within the session, not re-delivered
    std::vector<Collision> collisions;
};

class HarvestError : public Error {
public:
    enum class Kind {
        restart_required,  // upstream rejected our resumption token
        resumable,         // network or HTTP failure; retry from `cursor`
        protocol,          // malformed or looping upstream responses
        upstream,          // upstream answered with an OAI-PMH error
    };

    HarvestError(Kind kind, const std::string& what, HarvestReport partial, std::optional<std::string> cursor)
        : Error(what), kind_(kind), partial_(std::move(partial)), cursor_(std::move(cursor)) {}

    Kind kind() const noexcept { return kind_; }
    const HarvestReport& partial() const noexcept { return partial_; }
    /// Last resumption token whose page was fully delivered.
    const std::optional<std::string>& cursor() const noexcept { return cursor_; }

private:
    Kind kind_;
    HarvestReport partial_;
    std::optional<std::string> cursor_;
};

struct HttpResponse {
    int status = 0;  // 0: transport failure
    std::string body;
    std::optional<std::string> retry_after;
    std::string error;  // transport failure detail
};

using HttpFetcher = std::function<HttpResponse(const std::string& url)>;

struct HarvestOptions {
    std::string user_agent = "oaisim-harvester/1.0";
    std::optional<std::string> from_header;  // sent as the HTTP From header
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{1000};
    std::chrono::milliseconds backoff_cap{60000};
    int max_token_repeats = 3;
    std::chrono::seconds timeout{60};
    /// Defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
    /// Defaults to an HTTP/1.1 GET client.
    HttpFetcher fetcher;
};

HttpFetcher http_fetcher(const HarvestOptions& options);

/// Delay before the next attempt after `attempt` (1-based) failed.
std::chrono::milliseconds retry_delay(const HarvestOptions& options, int attempt,
                                      const std::optional<std::string>& retry_after);

/// ListRecords with resumption, delivering each identifier to `sink` once.
/// Updates session.cursor and session.records_received as pages arrive.
HarvestReport harvest(HarvestSession& session, const RecordSink& sink, const HarvestOptions& options = {});

/// OAI provenance block recording a harvest of `record` from `base_url`. Any
/// existing chain on the record is nested inside the new originDescription.
std::string make_provenance(const MetadataRecord& record, const std::string& base_url,
                            const std::string& harvest_date, const std::string& metadata_namespace);

struct ProvenanceInfo {
    std::set<std::string> base_urls;
    std::set<std::string> identifiers;
    std::optional<std::string> origin_base_url;  // innermost originDescription
};

ProvenanceInfo provenance_info(std::span<const std::string> blocks);

/// Sink that stamps a provenance block and writes into `store`.
RecordSink store_sink(RecordStore& store, std::string base_url, std::string harvest_date);

}  // namespace oaisim
