#include "oaisim/oai_xml.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unordered_set>

#include "oaisim/error.hpp"
#include "oaisim/timefmt.hpp"
#include "xml_dom.hpp"

namespace oaisim {

namespace {

const std::string kOai(kOaiNamespace);
const std::string kOaiDc(kOaiDcNamespace);
const std::string kDc(kDcNamespace);
const std::string kProv(kProvenanceNamespace);
const std::string kXsi(kXsiNamespace);
const std::string kSim(kSimilarityNamespace);

constexpr std::string_view kOaiSchemaLocation =
    "http://www.openarchives.org/OAI/2.0/ http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd";
constexpr std::string_view kOaiDcSchemaLocation =
    "http://www.openarchives.org/OAI/2.0/oai_dc/ http://www.openarchives.org/OAI/2.0/oai_dc.xsd";

double quantize_score(double score) { return std::nearbyint(score * 10000.0) / 10000.0; }

void write_similarity(xml::Writer& w, const SimilarityAbout& about, std::string_view schema_location,
                      bool declare_xsi) {
    w.start("similarity");
    w.attr("xmlns", kSimilarityNamespace);
    if (declare_xsi) w.attr("xmlns:xsi", kXsiNamespace);
    w.attr("xsi:schemaLocation", std::string(kSimilarityNamespace) + " " + std::string(schema_location));
    w.attr("subject", about.subject_identifier);
    w.attr("computedDate", about.computed_at);
    for (const auto& m : about.matches) {
        w.start("match", {{"identifier", m.identifier}});
        w.attr("score", format_score(m.score));
        w.end("match");
    }
    w.end("similarity");
}

void write_header(xml::Writer& w, const MetadataRecord& record) {
    w.start("header");
    if (record.deleted) w.attr("status", "deleted");
    w.leaf("identifier", record.identifier);
    w.leaf("datestamp", record.datestamp);
    for (const auto& spec : record.set_specs) w.leaf("setSpec", spec);
    w.end("header");
}

void write_record(xml::Writer& w, const MetadataRecord& record, const SimilarityAbout* about,
                  std::string_view schema_location, bool standalone) {
    w.start("record");
    if (standalone) {
        w.attr("xmlns", kOaiNamespace);
        w.attr("xmlns:xsi", kXsiNamespace);
    }
    write_header(w, record);
    if (!record.deleted) {
        w.start("metadata");
        w.start("oai_dc:dc", {{"xmlns:oai_dc", kOaiDcNamespace}, {"xmlns:dc", kDcNamespace}});
        w.attr("xsi:schemaLocation", kOaiDcSchemaLocation);
        for (const auto& field : record.dc_fields) w.leaf("dc:" + field.element, field.value);
        w.end("oai_dc:dc");
        w.end("metadata");
    }
    for (const auto& block : record.provenance) {
        w.start("about");
        w.raw(block);
        w.end("about");
    }
    if (about != nullptr) {
        w.start("about");
        write_similarity(w, *about, schema_location, false);
        w.end("about");
    }
    w.end("record");
}

bool echoes_arguments(std::span<const OaiError> errors) {
    return std::none_of(errors.begin(), errors.end(), [](const OaiError& e) {
        return e.code == OaiErrorCode::badVerb || e.code == OaiErrorCode::badArgument;
    });
}

void open_envelope(xml::Writer& w, const ResponseHeader& header, bool echo_arguments) {
    w.start("OAI-PMH", {{"xmlns", kOaiNamespace}, {"xmlns:xsi", kXsiNamespace}});
    w.attr("xsi:schemaLocation", kOaiSchemaLocation);
    w.leaf("responseDate", header.response_date.empty() ? utc_now() : header.response_date);
    w.start("request");
    if (echo_arguments)
        for (const auto& [key, value] : header.request.arguments) w.attr(key, value);
    w.text(header.request.base_url);
    w.end("request");
}

std::string close_envelope(xml::Writer& w) {
    w.end("OAI-PMH");
    std::string out = w.take();
    out.push_back('\n');
    return out;
}

void write_token(xml::Writer& w, const std::optional<ResumptionToken>& token) {
    if (!token) return;
    w.start("resumptionToken");
    if (token->expiration_date) w.attr("expirationDate", *token->expiration_date);
    if (token->complete_list_size) w.attr("completeListSize", std::to_string(*token->complete_list_size));
    if (token->cursor) w.attr("cursor", std::to_string(*token->cursor));
    w.text(token->value);
    w.end("resumptionToken");
}

// ---- parsing ----

std::uint64_t parse_count(const std::string& text, const xml::Element& at) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError("invalid non-negative integer '" + text + "'", at.offset);
    return value;
}

double parse_score(const std::string& text, const xml::Element& at) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !(value >= 0.0 && value <= 1.0))
        throw ParseError("invalid similarity score '" + text + "'", at.offset);
    return value;
}

SimilarityAbout read_similarity(const xml::Element& e) {
    SimilarityAbout about;
    if (const auto* s = e.attribute("subject")) about.subject_identifier = *s;
    if (const auto* d = e.attribute("computedDate")) about.computed_at = *d;
    for (const auto* m : e.children()) {
        if (!m->is(kSim, "match")) continue;
        SimilarityMatch match;
        if (const auto* id = m->attribute("identifier")) match.identifier = *id;
        const auto* score = m->attribute("score");
        if (score == nullptr) throw ParseError("match without score", m->offset);
        match.score = parse_score(*score, *m);
        about.matches.push_back(std::move(match));
    }
    return about;
}

void read_header(const xml::Element& h, MetadataRecord& record) {
    if (const auto* status = h.attribute("status")) record.deleted = *status == "deleted";
    for (const auto* c : h.children()) {
        if (c->is(kOai, "identifier")) record.identifier = c->text();
        else if (c->is(kOai, "datestamp")) record.datestamp = c->text();
        else if (c->is(kOai, "setSpec")) record.set_specs.push_back(c->text());
    }
}

RecordEntry read_record(const xml::Element& r) {
    RecordEntry entry;
    for (const auto* c : r.children()) {
        if (c->is(kOai, "header")) {
            read_header(*c, entry.record);
        } else if (c->is(kOai, "metadata")) {
            const auto* dc = c->child(kOaiDc, "dc");
            if (dc == nullptr) continue;
            for (const auto* f : dc->children())
                if (f->ns == kDc) entry.record.dc_fields.push_back({f->name, f->text()});
        } else if (c->is(kOai, "about")) {
            for (const auto* payload : c->children()) {
                if (payload->is(kProv, "provenance"))
                    entry.record.provenance.push_back(xml::canonicalize(*payload));
                else if (payload->is(kSim, "similarity"))
                    entry.similarity = read_similarity(*payload);
            }
        }
    }
    if (entry.record.deleted) entry.record.dc_fields.clear();
    return entry;
}

ResumptionToken read_token(const xml::Element& t) {
    ResumptionToken token;
    token.value = t.text();
    if (const auto* v = t.attribute("completeListSize")) token.complete_list_size = parse_count(*v, t);
    if (const auto* v = t.attribute("cursor")) token.cursor = parse_count(*v, t);
    if (const auto* v = t.attribute("expirationDate")) token.expiration_date = *v;
    return token;
}

RepositoryIdentity read_identity(const xml::Element& e) {
    RepositoryIdentity id;
    id.protocol_version.clear();
    id.deleted_record.clear();
    id.granularity.clear();
    for (const auto* c : e.children()) {
        if (c->ns != kOai) continue;
        if (c->name == "repositoryName") id.repository_name = c->text();
        else if (c->name == "baseURL") id.base_url = c->text();
        else if (c->name == "protocolVersion") id.protocol_version = c->text();
        else if (c->name == "adminEmail") id.admin_emails.push_back(c->text());
        else if (c->name == "earliestDatestamp") id.earliest_datestamp = c->text();
        else if (c->name == "deletedRecord") id.deleted_record = c->text();
        else if (c->name == "granularity") id.granularity = c->text();
    }
    return id;
}

}  // namespace

MetadataFormat oai_dc_format() {
    return {"oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc.xsd", std::string(kOaiDcNamespace)};
}

std::string format_score(double score) {
    const auto scaled = static_cast<long long>(std::nearbyint(score * 10000.0));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%04lld", scaled / 10000, scaled % 10000);
    return buf;
}

SimilarityAbout build_similarity_about(std::string_view subject, std::span<const SimilarityMatch> matches,
                                       std::size_t k, std::string computed_at) {
    SimilarityAbout about;
    about.subject_identifier = std::string(subject);
    about.computed_at = std::move(computed_at);
    std::vector<SimilarityMatch> kept;
    kept.reserve(matches.size());
    for (const auto& m : matches) {
        if (!(m.score >= 0.0 && m.score <= 1.0))
            throw ValidationError("similarity score out of [0,1] for " + m.identifier);
        if (m.identifier == subject) continue;
        kept.push_back({m.identifier, quantize_score(m.score)});
    }
    std::sort(kept.begin(), kept.end(), [](const SimilarityMatch& a, const SimilarityMatch& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.identifier < b.identifier;
    });
    std::unordered_set<std::string> seen;
    for (auto& m : kept) {
        if (about.matches.size() == k) break;
        if (seen.insert(m.identifier).second) about.matches.push_back(std::move(m));
    }
    return about;
}

std::string serialize_get_record(const MetadataRecord& record, const std::optional<SimilarityAbout>& about,
                                 const ResponseHeader& header) {
    if (record.deleted && about) throw ValidationError("deleted record cannot carry similarity data");
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("GetRecord");
    write_record(w, record, about ? &*about : nullptr, header.similarity_schema_location, false);
    w.end("GetRecord");
    return close_envelope(w);
}

std::string serialize_list_records(std::span<const MetadataRecord> records,
                                   const std::optional<ResumptionToken>& token, const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("ListRecords");
    for (const auto& r : records) write_record(w, r, nullptr, header.similarity_schema_location, false);
    write_token(w, token);
    w.end("ListRecords");
    return close_envelope(w);
}

std::string serialize_list_identifiers(std::span<const MetadataRecord> records,
                                       const std::optional<ResumptionToken>& token,
                                       const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("ListIdentifiers");
    for (const auto& r : records) write_header(w, r);
    write_token(w, token);
    w.end("ListIdentifiers");
    return close_envelope(w);
}

std::string serialize_identify(const RepositoryIdentity& identity, const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("Identify");
    w.leaf("repositoryName", identity.repository_name);
    w.leaf("baseURL", identity.base_url);
    w.leaf("protocolVersion", identity.protocol_version);
    for (const auto& email : identity.admin_emails) w.leaf("adminEmail", email);
    w.leaf("earliestDatestamp", identity.earliest_datestamp);
    w.leaf("deletedRecord", identity.deleted_record);
    w.leaf("granularity", identity.granularity);
    w.end("Identify");
    return close_envelope(w);
}

std::string serialize_list_metadata_formats(std::span<const MetadataFormat> formats,
                                            const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("ListMetadataFormats");
    for (const auto& f : formats) {
        w.start("metadataFormat");
        w.leaf("metadataPrefix", f.prefix);
        w.leaf("schema", f.schema);
        w.leaf("metadataNamespace", f.metadata_namespace);
        w.end("metadataFormat");
    }
    w.end("ListMetadataFormats");
    return close_envelope(w);
}

std::string serialize_list_sets(std::span<const SetEntry> sets, const std::optional<ResumptionToken>& token,
                                const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, true);
    w.start("ListSets");
    for (const auto& s : sets) {
        w.start("set");
        w.leaf("setSpec", s.spec);
        w.leaf("setName", s.name);
        w.end("set");
    }
    write_token(w, token);
    w.end("ListSets");
    return close_envelope(w);
}

std::string serialize_error(std::span<const OaiError> errors, const ResponseHeader& header) {
    xml::Writer w;
    open_envelope(w, header, echoes_arguments(errors));
    for (const auto& e : errors) w.leaf("error", e.message, {{"code", to_string(e.code)}});
    return close_envelope(w);
}

std::string serialize_error(const OaiError& error, const ResponseHeader& header) {
    return serialize_error(std::span<const OaiError>(&error, 1), header);
}

std::string serialize_similarity_document(const SimilarityAbout& about, std::string_view schema_location) {
    xml::Writer w;
    write_similarity(w, about, schema_location, true);
    std::string out = w.take();
    out.push_back('\n');
    return out;
}

SimilarityAbout parse_similarity_document(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    if (!root->is(kSim, "similarity")) throw ProtocolMismatch("not a similarity document");
    return read_similarity(*root);
}

std::string serialize_record_document(const MetadataRecord& record) {
    xml::Writer w;
    write_record(w, record, nullptr, {}, true);
    std::string out = w.take();
    out.push_back('\n');
    return out;
}

MetadataRecord parse_record_document(std::string_view xml_text) {
    const auto root = xml::parse(xml_text);
    if (!root->is(kOai, "record")) throw ProtocolMismatch("not an OAI record document");
    return read_record(*root).record;
}

ParsedResponse parse_response(std::string_view xml_text, Verb expected_verb) {
    const auto root = xml::parse(xml_text);
    if (!root->is(kOai, "OAI-PMH")) throw ProtocolMismatch("root element is not OAI-PMH");

    ParsedResponse out;
    for (const auto* c : root->children()) {
        if (c->ns != kOai) continue;
        if (c->name == "responseDate") {
            out.response_date = c->text();
        } else if (c->name == "request") {
            out.request.base_url = c->text();
            for (const auto& a : c->attributes)
                if (a.ns.empty()) out.request.arguments.emplace_back(a.name, a.value);
        } else if (c->name == "error") {
            const auto* code = c->attribute("code");
            const auto parsed = code ? parse_error_code(*code) : std::nullopt;
            if (!parsed) throw ParseError("unknown OAI-PMH error code", c->offset);
            out.errors.push_back({*parsed, c->text()});
        } else if (const auto verb = parse_verb(c->name)) {
            if (*verb != expected_verb)
                throw ProtocolMismatch("expected " + std::string(to_string(expected_verb)) + " response, got " +
                                       c->name);
            out.verb = verb;
            for (const auto* item : c->children()) {
                if (item->ns != kOai) continue;
                if (item->name == "record") {
                    out.records.push_back(read_record(*item));
                } else if (item->name == "header") {
                    RecordEntry entry;
                    read_header(*item, entry.record);
                    out.records.push_back(std::move(entry));
                } else if (item->name == "resumptionToken") {
                    out.resumption_token = read_token(*item);
                } else if (item->name == "metadataFormat") {
                    MetadataFormat f;
                    for (const auto* p : item->children()) {
                        if (p->is(kOai, "metadataPrefix")) f.prefix = p->text();
                        else if (p->is(kOai, "schema")) f.schema = p->text();
                        else if (p->is(kOai, "metadataNamespace")) f.metadata_namespace = p->text();
                    }
                    out.metadata_formats.push_back(std::move(f));
                } else if (item->name == "set") {
                    SetEntry s;
                    for (const auto* p : item->children()) {
                        if (p->is(kOai, "setSpec")) s.spec = p->text();
                        else if (p->is(kOai, "setName")) s.name = p->text();
                    }
                    out.sets.push_back(std::move(s));
                }
            }
            if (*verb == Verb::Identify) out.identity = read_identity(*c);
        }
    }
    if (!out.verb && out.errors.empty())
        throw ProtocolMismatch("response carries neither a verb payload nor errors");
    return out;
}

}  // namespace oaisim
