#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace oaisim {

struct Violation {
    std::size_t offset = 0;  // byte offset of the offending element
    std::string message;
};

/// Checks a response body against the OAI-PMH 2.0 content model, including the
/// oai_dc, provenance and similarity payloads it may carry. Empty means valid.
/// Malformed XML is reported as a single violation.
std::vector<Violation> validate_oai_response(std::string_view xml);

/// Checks a standalone `<similarity>` document against similarity.xsd.
std::vector<Violation> validate_similarity_document(std::string_view xml);

/// The shipped similarity.xsd, byte-for-byte.
std::string_view similarity_schema();

}  // namespace oaisim
