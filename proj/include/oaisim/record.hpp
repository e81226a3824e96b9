#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oaisim {

inline constexpr std::string_view kOaiNamespace = "http://www.openarchives.org/OAI/2.0/";
inline constexpr std::string_view kOaiDcNamespace = "http://www.openarchives.org/OAI/2.0/oai_dc/";
inline constexpr std::string_view kDcNamespace = "http://purl.org/dc/elements/1.1/";
inline constexpr std::string_view kProvenanceNamespace = "http://www.openarchives.org/OAI/2.0/provenance";
inline constexpr std::string_view kXsiNamespace = "http://www.w3.org/2001/XMLSchema-instance";
inline constexpr std::string_view kSimilarityNamespace = "urn:oaisim:similarity";

/// The fifteen unqualified Dublin Core elements, in the order oai_dc.xsd lists them.
inline constexpr std::array<std::string_view, 15> kDublinCoreElements = {
    "title", "creator", "subject", "description", "publisher",
    "contributor", "date", "type", "format", "identifier",
    "source", "language", "relation", "coverage", "rights"};

bool is_dublin_core_element(std::string_view name);

struct DcField {
    std::string element;
    std::string value;
    bool operator==(const DcField&) const = default;
};

/// One harvested OAI record.
struct MetadataRecord {
    std::string identifier;
    std::string datestamp;
    std::vector<std::string> set_specs;
    std::vector<DcField> dc_fields;
    /// Raw `<provenance>` XML blocks, byte-for-byte as received.
    std::vector<std::string> provenance;
    bool deleted = false;

    bool operator==(const MetadataRecord&) const = default;
};

/// Throws ValidationError if the record breaks an invariant.
void validate(const MetadataRecord& record);

struct SimilarityMatch {
    std::string identifier;
    double score = 0.0;
    bool operator==(const SimilarityMatch&) const = default;
};

/// Similarity list carried in a record's `<about>` container.
struct SimilarityAbout {
    std::string subject_identifier;
    std::string computed_at;  // UTC, YYYY-MM-DDThh:mm:ssZ
    std::vector<SimilarityMatch> matches;
    bool operator==(const SimilarityAbout&) const = default;
};

enum class OaiErrorCode {
    badVerb,
    badArgument,
    idDoesNotExist,
    noRecordsMatch,
    cannotDisseminateFormat,
    badResumptionToken,
    noMetadataFormats,
    noSetHierarchy,
};

std::string_view to_string(OaiErrorCode code);
std::optional<OaiErrorCode> parse_error_code(std::string_view text);

struct OaiError {
    OaiErrorCode code = OaiErrorCode::badArgument;
    std::string message;
    bool operator==(const OaiError&) const = default;
};

enum class Verb {
    Identify,
    ListMetadataFormats,
    ListSets,
    ListIdentifiers,
    ListRecords,
    GetRecord,
};

std::string_view to_string(Verb verb);
std::optional<Verb> parse_verb(std::string_view text);

}  // namespace oaisim
