#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oaisim/record.hpp"
#include "oaisim/url.hpp"

namespace oaisim {

/// Inbound request as echoed in the `<request>` element. `arguments` includes the verb.
struct RequestEcho {
    std::string base_url;
    QueryArgs arguments;
    bool operator==(const RequestEcho&) const = default;
};

/// Everything a response carries besides its verb payload.
struct ResponseHeader {
    std::string response_date;  // empty: use the current time
    RequestEcho request;
    std::string similarity_schema_location = "http://localhost/schema/similarity";
};

struct ResumptionToken {
    std::string value;
    std::optional<std::uint64_t> complete_list_size;
    std::optional<std::uint64_t> cursor;
    std::optional<std::string> expiration_date;

    bool has_more() const { return !value.empty(); }
    bool operator==(const ResumptionToken&) const = default;
};

struct RecordEntry {
    MetadataRecord record;
    std::optional<SimilarityAbout> similarity;
    bool operator==(const RecordEntry&) const = default;
};

struct RepositoryIdentity {
    std::string repository_name;
    std::string base_url;
    std::string protocol_version = "2.0";
    std::string earliest_datestamp;
    std::string deleted_record = "persistent";
    std::string granularity = "YYYY-MM-DDThh:mm:ssZ";
    std::vector<std::string> admin_emails;
    bool operator==(const RepositoryIdentity&) const = default;
};

struct MetadataFormat {
    std::string prefix;
    std::string schema;
    std::string metadata_namespace;
    bool operator==(const MetadataFormat&) const = default;
};

MetadataFormat oai_dc_format();

struct SetEntry {
    std::string spec;
    std::string name;
    bool operator==(const SetEntry&) const = default;
};

struct ParsedResponse {
    std::string response_date;
    RequestEcho request;
    std::optional<Verb> verb;  // absent when the response carries only errors
    std::vector<RecordEntry> records;  // GetRecord, ListRecords, ListIdentifiers (headers only)
    std::optional<ResumptionToken> resumption_token;
    std::vector<OaiError> errors;
    std::optional<RepositoryIdentity> identity;
    std::vector<MetadataFormat> metadata_formats;
    std::vector<SetEntry> sets;
};

/// Parses any OAI-PMH 2.0 response body.
/// Throws ParseError on malformed XML and ProtocolMismatch when the payload
/// verb differs from `expected_verb` or the root is not an OAI-PMH element.
ParsedResponse parse_response(std::string_view xml, Verb expected_verb);

std::string serialize_get_record(const MetadataRecord& record, const std::optional<SimilarityAbout>& about,
                                 const ResponseHeader& header);
std::string serialize_list_records(std::span<const MetadataRecord> records,
                                   const std::optional<ResumptionToken>& token, const ResponseHeader& header);
std::string serialize_list_identifiers(std::span<const MetadataRecord> records,
                                       const std::optional<ResumptionToken>& token,
                                       const ResponseHeader& header);
std::string serialize_identify(const RepositoryIdentity& identity, const ResponseHeader& header);
std::string serialize_list_metadata_formats(std::span<const MetadataFormat> formats,
                                            const ResponseHeader& header);
std::string serialize_list_sets(std::span<const SetEntry> sets, const std::optional<ResumptionToken>& token,
                                const ResponseHeader& header);
std::string serialize_error(std::span<const OaiError> errors, const ResponseHeader& header);
std::string serialize_error(const OaiError& error, const ResponseHeader& header);

/// Standalone `<similarity>` document, as served by the auxiliary /similar endpoint.
std::string serialize_similarity_document(const SimilarityAbout& about, std::string_view schema_location);
SimilarityAbout parse_similarity_document(std::string_view xml);

/// A single `<record>` as a standalone document; this is the on-disk record format.
std::string serialize_record_document(const MetadataRecord& record);
MetadataRecord parse_record_document(std::string_view xml);

/// Keeps at most `k` matches, drops the subject, sorts by score descending
/// then identifier ascending. Throws ValidationError on a score outside [0,1].
SimilarityAbout build_similarity_about(std::string_view subject, std::span<const SimilarityMatch> matches,
                                       std::size_t k, std::string computed_at);

/// Fixed four decimals, round-half-even on the scaled binary value.
std::string format_score(double score);

}  // namespace oaisim
