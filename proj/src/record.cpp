#include "oaisim/record.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "oaisim/error.hpp"

namespace oaisim {

bool is_dublin_core_element(std::string_view name) {
    return std::find(kDublinCoreElements.begin(), kDublinCoreElements.end(), name) !=
           kDublinCoreElements.end();
}

void validate(const MetadataRecord& record) {
    if (record.identifier.empty()) throw ValidationError("record identifier is empty");
    if (record.deleted && !record.dc_fields.empty())
        throw ValidationError("deleted record " + record.identifier + " carries metadata");
    for (const auto& field : record.dc_fields) {
        if (!is_dublin_core_element(field.element))
            throw ValidationError("'" + field.element + "' is not a Dublin Core element");
    }
}

namespace {

constexpr std::array<std::pair<OaiErrorCode, std::string_view>, 8> kErrorNames = {{
    {OaiErrorCode::badVerb, "badVerb"},
    {OaiErrorCode::badArgument, "badArgument"},
    {OaiErrorCode::idDoesNotExist, "idDoesNotExist"},
    {OaiErrorCode::noRecordsMatch, "noRecordsMatch"},
    {OaiErrorCode::cannotDisseminateFormat, "cannotDisseminateFormat"},
    {OaiErrorCode::badResumptionToken, "badResumptionToken"},
    {OaiErrorCode::noMetadataFormats, "noMetadataFormats"},
    {OaiErrorCode::noSetHierarchy, "noSetHierarchy"},
}};

constexpr std::array<std::pair<Verb, std::string_view>, 6> kVerbNames = {{
    {Verb::Identify, "Identify"},
    {Verb::ListMetadataFormats, "ListMetadataFormats"},
    {Verb::ListSets, "ListSets"},
    {Verb::ListIdentifiers, "ListIdentifiers"},
    {Verb::ListRecords, "ListRecords"},
    {Verb::GetRecord, "GetRecord"},
}};

}  // namespace

std::string_view to_string(OaiErrorCode code) {
    for (const auto& [c, name] : kErrorNames)
        if (c == code) return name;
    return "badArgument";
}

std::optional<OaiErrorCode> parse_error_code(std::string_view text) {
    for (const auto& [c, name] : kErrorNames)
        if (name == text) return c;
    return std::nullopt;
}

std::string_view to_string(Verb verb) {
    for (const auto& [v, name] : kVerbNames)
        if (v == verb) return name;
    return "Identify";
}

std::optional<Verb> parse_verb(std::string_view text) {
    for (const auto& [v, name] : kVerbNames)
        if (name == text) return v;
    return std::nullopt;
}

}  // namespace oaisim
