#include "oaisim/oai_validate.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <regex>

#include "oaisim/error.hpp"
#include "oaisim/record.hpp"
#include "oaisim/timefmt.hpp"
#include "xml_dom.hpp"

namespace oaisim {

namespace {

using xml::Element;

const std::string kOai(kOaiNamespace);
const std::string kOaiDc(kOaiDcNamespace);
const std::string kDc(kDcNamespace);
const std::string kProv(kProvenanceNamespace);
const std::string kXsi(kXsiNamespace);
const std::string kSim(kSimilarityNamespace);
const std::string kXmlNs = "http://www.w3.org/XML/1998/namespace";

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

struct Particle {
    std::string_view name;
    std::size_t min;
    std::size_t max;
};

class Checker {
public:
    std::vector<Violation> violations;

    void fail(const Element& at, std::string message) { violations.push_back({at.offset, std::move(message)}); }

    /// Children must match `particles` as an ordered sequence, all in namespace `ns`.
    void sequence(const Element& parent, const std::string& ns, std::initializer_list<Particle> particles) {
        const auto kids = parent.children();
        std::size_t i = 0;
        for (const auto& p : particles) {
            std::size_t count = 0;
            while (i < kids.size() && kids[i]->is(ns, p.name) && count < p.max) {
                ++count;
                ++i;
            }
            if (count < p.min)
                fail(parent, "<" + parent.name + "> requires at least " + std::to_string(p.min) + " <" +
                                 std::string(p.name) + ">");
        }
        if (i < kids.size()) fail(*kids[i], "unexpected element <" + kids[i]->name + "> in <" + parent.name + ">");
        no_text(parent);
    }

    void no_text(const Element& e) {
        const auto text = e.text();
        if (text.find_first_not_of(" \t\r\n") != std::string::npos)
            fail(e, "<" + e.name + "> must not contain character data");
    }

    void text_only(const Element& e) {
        if (!e.children().empty()) fail(e, "<" + e.name + "> must contain text only");
    }

    /// Unqualified attributes must be in `allowed`; xsi attributes are always permitted.
    void attributes(const Element& e, std::initializer_list<std::string_view> allowed,
                    std::initializer_list<std::string_view> required = {}) {
        for (const auto& a : e.attributes) {
            if (a.ns == kXsi) continue;
            if (!a.ns.empty() || std::find(allowed.begin(), allowed.end(), a.name) == allowed.end())
                fail(e, "attribute '" + a.name + "' not allowed on <" + e.name + ">");
        }
        for (auto name : required)
            if (e.attribute(name) == nullptr)
                fail(e, "<" + e.name + "> requires attribute '" + std::string(name) + "'");
    }

    void utc_datetime(const Element& at, const std::string& text, bool seconds_only, std::string_view what) {
        const auto stamp = parse_utc(text);
        if (!stamp || (seconds_only && stamp->granularity != Granularity::second))
            fail(at, std::string(what) + " '" + text + "' is not a UTC " +
                         (seconds_only ? "dateTime" : "date or dateTime"));
    }

    void non_negative(const Element& at, const std::string& text, bool positive, std::string_view what) {
        unsigned long long v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || (positive && v == 0))
            fail(at, std::string(what) + " '" + text + "' is not a " +
                         (positive ? "positive" : "non-negative") + " integer");
    }

    // ---- payload schemas ----

    void dublin_core(const Element& dc) {
        attributes(dc, {});
        for (const auto* f : dc.children()) {
            if (f->ns != kDc || !is_dublin_core_element(f->name)) {
                fail(*f, "<" + f->name + "> is not an oai_dc element");
                continue;
            }
            for (const auto& a : f->attributes)
                if (!(a.ns == kXmlNs && a.name == "lang")) fail(*f, "attribute '" + a.name + "' not allowed");
            text_only(*f);
        }
        no_text(dc);
    }

    void origin_description(const Element& od) {
        attributes(od, {"harvestDate", "altered"}, {"harvestDate", "altered"});
        if (const auto* d = od.attribute("harvestDate")) utc_datetime(od, *d, false, "harvestDate");
        if (const auto* a = od.attribute("altered"); a && *a != "true" && *a != "false" && *a != "1" && *a != "0")
            fail(od, "altered must be boolean");
        sequence(od, kProv,
                 {{"baseURL", 1, 1}, {"identifier", 1, 1}, {"datestamp", 1, 1}, {"metadataNamespace", 1, 1},
                  {"originDescription", 0, 1}});
        for (const auto* c : od.children()) {
            if (c->is(kProv, "originDescription")) origin_description(*c);
            else text_only(*c);
        }
    }

    void provenance(const Element& p) {
        attributes(p, {});
        sequence(p, kProv, {{"originDescription", 1, kUnbounded}});
        for (const auto* c : p.children())
            if (c->is(kProv, "originDescription")) origin_description(*c);
    }

    void similarity(const Element& s) {
        static const std::regex kScore("[01]\\.[0-9]{4}");
        attributes(s, {"subject", "computedDate"}, {"subject", "computedDate"});
        if (const auto* d = s.attribute("computedDate")) utc_datetime(s, *d, true, "computedDate");
        sequence(s, kSim, {{"match", 0, kUnbounded}});
        double previous = 2.0;
        for (const auto* m : s.children()) {
            if (!m->is(kSim, "match")) continue;
            attributes(*m, {"identifier", "score"}, {"identifier", "score"});
            if (!m->children().empty() || m->text().find_first_not_of(" \t\r\n") != std::string::npos)
                fail(*m, "<match> must be empty");
            const auto* score = m->attribute("score");
            if (score == nullptr) continue;
            if (!std::regex_match(*score, kScore)) {
                fail(*m, "score '" + *score + "' is not a 4-decimal value");
                continue;
            }
            const double value = std::stod(*score);
            if (value > 1.0) fail(*m, "score '" + *score + "' exceeds 1");
            if (value > previous) fail(*m, "matches are not ordered by descending score");
            previous = value;
        }
    }

    // ---- OAI-PMH ----

    void header(const Element& h) {
        attributes(h, {"status"});
        if (const auto* s = h.attribute("status"); s && *s != "deleted") fail(h, "status must be 'deleted'");
        sequence(h, kOai, {{"identifier", 1, 1}, {"datestamp", 1, 1}, {"setSpec", 0, kUnbounded}});
        for (const auto* c : h.children()) {
            text_only(*c);
            if (c->is(kOai, "datestamp")) utc_datetime(*c, c->text(), false, "datestamp");
            if (c->is(kOai, "setSpec")) set_spec(*c, c->text());
        }
    }

    void set_spec(const Element& at, const std::string& spec) {
        static const std::regex kSpec("([A-Za-z0-9\\-_\\.!~\\*'\\(\\)])+(:[A-Za-z0-9\\-_\\.!~\\*'\\(\\)]+)*");
        if (!std::regex_match(spec, kSpec)) fail(at, "invalid setSpec '" + spec + "'");
    }

    void single_foreign_child(const Element& wrapper) {
        attributes(wrapper, {});
        no_text(wrapper);
        const auto kids = wrapper.children();
        if (kids.size() != 1) {
            fail(wrapper, "<" + wrapper.name + "> must contain exactly one element");
            return;
        }
        const Element& payload = *kids.front();
        if (payload.ns == kOai) fail(payload, "<" + wrapper.name + "> payload must be in a foreign namespace");
        else if (payload.is(kOaiDc, "dc")) dublin_core(payload);
        else if (payload.is(kProv, "provenance")) provenance(payload);
        else if (payload.is(kSim, "similarity")) similarity(payload);
        else fail(payload, "no schema known for {" + payload.ns + "}" + payload.name);
    }

    void record(const Element& r) {
        attributes(r, {});
        sequence(r, kOai, {{"header", 1, 1}, {"metadata", 0, 1}, {"about", 0, kUnbounded}});
        const Element* hdr = r.child(kOai, "header");
        if (hdr) header(*hdr);
        const bool deleted = hdr && hdr->attribute("status") != nullptr;
        for (const auto* c : r.children()) {
            if (c->is(kOai, "metadata")) {
                if (deleted) fail(*c, "deleted record carries metadata");
                single_foreign_child(*c);
            } else if (c->is(kOai, "about")) {
                single_foreign_child(*c);
            }
        }
    }

    void resumption_token(const Element& t) {
        attributes(t, {"expirationDate", "completeListSize", "cursor"});
        text_only(t);
        if (const auto* v = t.attribute("expirationDate")) utc_datetime(t, *v, true, "expirationDate");
        if (const auto* v = t.attribute("completeListSize")) non_negative(t, *v, true, "completeListSize");
        if (const auto* v = t.attribute("cursor")) non_negative(t, *v, false, "cursor");
    }

    void request(const Element& r) {
        static const std::regex kPrefix("[A-Za-z0-9\\-_\\.!~\\*'\\(\\)]+");
        attributes(r, {"verb", "identifier", "metadataPrefix", "from", "until", "set", "resumptionToken"});
        text_only(r);
        if (const auto* v = r.attribute("verb"); v && !parse_verb(*v)) fail(r, "request verb '" + *v + "' unknown");
        if (const auto* p = r.attribute("metadataPrefix"); p && !std::regex_match(*p, kPrefix))
            fail(r, "invalid metadataPrefix '" + *p + "'");
        if (const auto* f = r.attribute("from")) utc_datetime(r, *f, false, "from");
        if (const auto* u = r.attribute("until")) utc_datetime(r, *u, false, "until");
        if (const auto* s = r.attribute("set")) set_spec(r, *s);
    }

    void identify(const Element& e) {
        sequence(e, kOai,
                 {{"repositoryName", 1, 1}, {"baseURL", 1, 1}, {"protocolVersion", 1, 1},
                  {"adminEmail", 1, kUnbounded}, {"earliestDatestamp", 1, 1}, {"deletedRecord", 1, 1},
                  {"granularity", 1, 1}, {"compression", 0, kUnbounded}, {"description", 0, kUnbounded}});
        static const std::regex kEmail("\\S+@(\\S+\\.)+\\S+");
        for (const auto* c : e.children()) {
            if (c->ns != kOai || c->name == "description") continue;
            text_only(*c);
            const auto text = c->text();
            if (c->name == "protocolVersion" && text != "2.0") fail(*c, "protocolVersion must be 2.0");
            if (c->name == "adminEmail" && !std::regex_match(text, kEmail)) fail(*c, "invalid adminEmail");
            if (c->name == "earliestDatestamp") utc_datetime(*c, text, false, "earliestDatestamp");
            if (c->name == "deletedRecord" && text != "no" && text != "persistent" && text != "transient")
                fail(*c, "invalid deletedRecord");
            if (c->name == "granularity" && text != "YYYY-MM-DD" && text != "YYYY-MM-DDThh:mm:ssZ")
                fail(*c, "invalid granularity");
        }
    }

    void verb_payload(const Element& v, Verb verb) {
        attributes(v, {});
        switch (verb) {
            case Verb::Identify: identify(v); break;
            case Verb::ListMetadataFormats:
                sequence(v, kOai, {{"metadataFormat", 1, kUnbounded}});
                for (const auto* f : v.children()) {
                    sequence(*f, kOai, {{"metadataPrefix", 1, 1}, {"schema", 1, 1}, {"metadataNamespace", 1, 1}});
                    for (const auto* c : f->children()) text_only(*c);
                }
                break;
            case Verb::ListSets:
                sequence(v, kOai, {{"set", 1, kUnbounded}, {"resumptionToken", 0, 1}});
                for (const auto* s : v.children()) {
                    if (s->is(kOai, "resumptionToken")) { resumption_token(*s); continue; }
                    sequence(*s, kOai, {{"setSpec", 1, 1}, {"setName", 1, 1}, {"setDescription", 0, kUnbounded}});
                    if (const auto* spec = s->child(kOai, "setSpec")) set_spec(*spec, spec->text());
                }
                break;
            case Verb::ListIdentifiers:
                sequence(v, kOai, {{"header", 1, kUnbounded}, {"resumptionToken", 0, 1}});
                for (const auto* c : v.children()) {
                    if (c->is(kOai, "header")) header(*c);
                    else if (c->is(kOai, "resumptionToken")) resumption_token(*c);
                }
                break;
            case Verb::ListRecords:
                sequence(v, kOai, {{"record", 1, kUnbounded}, {"resumptionToken", 0, 1}});
                for (const auto* c : v.children()) {
                    if (c->is(kOai, "record")) record(*c);
                    else if (c->is(kOai, "resumptionToken")) resumption_token(*c);
                }
                break;
            case Verb::GetRecord:
                sequence(v, kOai, {{"record", 1, 1}});
                if (const auto* r = v.child(kOai, "record")) record(*r);
                break;
        }
    }

    void envelope(const Element& root) {
        if (!root.is(kOai, "OAI-PMH")) {
            fail(root, "root element must be {" + kOai + "}OAI-PMH");
            return;
        }
        attributes(root, {});
        no_text(root);
        const auto kids = root.children();
        std::size_t i = 0;
        if (i < kids.size() && kids[i]->is(kOai, "responseDate")) {
            text_only(*kids[i]);
            utc_datetime(*kids[i], kids[i]->text(), true, "responseDate");
            ++i;
        } else {
            fail(root, "missing <responseDate>");
        }
        if (i < kids.size() && kids[i]->is(kOai, "request")) {
            request(*kids[i]);
            ++i;
        } else {
            fail(root, "missing <request>");
        }
        if (i == kids.size()) {
            fail(root, "response carries neither errors nor a verb payload");
            return;
        }
        if (kids[i]->is(kOai, "error")) {
            for (; i < kids.size() && kids[i]->is(kOai, "error"); ++i) {
                attributes(*kids[i], {"code"}, {"code"});
                text_only(*kids[i]);
                if (const auto* code = kids[i]->attribute("code"); code && !parse_error_code(*code))
                    fail(*kids[i], "unknown error code '" + *code + "'");
            }
        } else if (const auto verb = kids[i]->ns == kOai ? parse_verb(kids[i]->name) : std::nullopt) {
            verb_payload(*kids[i], *verb);
            if (const auto* req = root.child(kOai, "request"))
                if (const auto* v = req->attribute("verb"); v && *v != kids[i]->name)
                    fail(*kids[i], "payload verb differs from request verb");
            ++i;
        } else {
            fail(*kids[i], "unexpected element <" + kids[i]->name + ">");
            ++i;
        }
        if (i < kids.size()) fail(*kids[i], "unexpected element <" + kids[i]->name + "> after payload");
    }
};

}  // namespace

std::vector<Violation> validate_oai_response(std::string_view xml_text) {
    Checker checker;
    try {
        const auto root = xml::parse(xml_text);
        checker.envelope(*root);
    } catch (const ParseError& e) {
        checker.violations.push_back({e.offset(), e.what()});
    }
    return std::move(checker.violations);
}

std::vector<Violation> validate_similarity_document(std::string_view xml_text) {
    Checker checker;
    try {
        const auto root = xml::parse(xml_text);
        if (!root->is(kSim, "similarity")) checker.fail(*root, "root element must be {" + kSim + "}similarity");
        else checker.similarity(*root);
    } catch (const ParseError& e) {
        checker.violations.push_back({e.offset(), e.what()});
    }
    return std::move(checker.violations);
}

}  // namespace oaisim
