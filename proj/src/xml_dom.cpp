#include "xml_dom.hpp"

#include <expat.h>

#include <map>

#include "oaisim/error.hpp"

namespace oaisim::xml {

namespace {

constexpr char kNsSeparator = '\x1F';

void split_name(const char* raw, std::string& ns, std::string& local) {
    std::string_view name(raw);
    const auto sep = name.find(kNsSeparator);
    if (sep == std::string_view::npos) {
        ns.clear();
        local = std::string(name);
    } else {
        ns = std::string(name.substr(0, sep));
        local = std::string(name.substr(sep + 1));
    }
}

struct BuildState {
    XML_Parser parser = nullptr;
    std::unique_ptr<Element> root;
    std::vector<Element*> stack;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto* state = static_cast<BuildState*>(user);
    auto element = std::make_unique<Element>();
    split_name(name, element->ns, element->name);
    element->offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(state->parser));
    for (int i = 0; attrs[i] != nullptr; i += 2) {
        Attribute attribute;
        split_name(attrs[i], attribute.ns, attribute.name);
        attribute.value = attrs[i + 1];
        element->attributes.push_back(std::move(attribute));
    }
    Element* raw = element.get();
    if (state->stack.empty()) {
        state->root = std::move(element);
    } else {
        state->stack.back()->content.emplace_back(std::move(element));
    }
    state->stack.push_back(raw);
}

void on_end(void* user, const XML_Char*) {
    static_cast<BuildState*>(user)->stack.pop_back();
}

void on_text(void* user, const XML_Char* text, int len) {
    auto* state = static_cast<BuildState*>(user);
    if (state->stack.empty()) return;
    auto& content = state->stack.back()->content;
    if (!content.empty() && std::holds_alternative<std::string>(content.back()))
        std::get<std::string>(content.back()).append(text, static_cast<std::size_t>(len));
    else
        content.emplace_back(std::string(text, static_cast<std::size_t>(len)));
}

}  // namespace

const std::string* Element::attribute(std::string_view attr_name, std::string_view attr_ns) const {
    for (const auto& a : attributes)
        if (a.name == attr_name && a.ns == attr_ns) return &a.value;
    return nullptr;
}

std::string Element::text() const {
    std::string out;
    for (const auto& c : content)
        if (const auto* s = std::get_if<std::string>(&c)) out += *s;
    return out;
}

std::vector<const Element*> Element::children() const {
    std::vector<const Element*> out;
    for (const auto& c : content)
        if (const auto* e = std::get_if<std::unique_ptr<Element>>(&c)) out.push_back(e->get());
    return out;
}

const Element* Element::child(std::string_view want_ns, std::string_view want_name) const {
    for (const auto* e : children())
        if (e->is(want_ns, want_name)) return e;
    return nullptr;
}

std::unique_ptr<Element> parse(std::string_view document) {
    BuildState state;
    state.parser = XML_ParserCreateNS("UTF-8", kNsSeparator);
    if (state.parser == nullptr) throw Error("cannot allocate XML parser");
    XML_SetUserData(state.parser, &state);
    XML_SetElementHandler(state.parser, on_start, on_end);
    XML_SetCharacterDataHandler(state.parser, on_text);
    const auto status = XML_Parse(state.parser, document.data(), static_cast<int>(document.size()), XML_TRUE);
    if (status != XML_STATUS_OK) {
        const std::string message = XML_ErrorString(XML_GetErrorCode(state.parser));
        const auto offset = XML_GetCurrentByteIndex(state.parser);
        XML_ParserFree(state.parser);
        throw ParseError("malformed XML: " + message, offset < 0 ? 0 : static_cast<std::size_t>(offset));
    }
    XML_ParserFree(state.parser);
    if (!state.root) throw ParseError("document has no root element", 0);
    return std::move(state.root);
}

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\r': out += "&#13;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string escape_attribute(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\t': out += "&#9;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

namespace {

void write_canonical(const Element& e, const std::string& inherited_ns, std::map<std::string, std::string>& prefixes,
                     std::string& out) {
    out += '<';
    out += e.name;
    if (e.ns != inherited_ns) {
        out += " xmlns=\"";
        out += escape_attribute(e.ns);
        out += '"';
    }
    for (const auto& a : e.attributes) {
        out += ' ';
        if (!a.ns.empty()) {
            auto it = prefixes.find(a.ns);
            if (it == prefixes.end()) {
                const std::string prefix = "ns" + std::to_string(prefixes.size() + 1);
                it = prefixes.emplace(a.ns, prefix).first;
                out += "xmlns:" + prefix + "=\"" + escape_attribute(a.ns) + "\" ";
            }
            out += it->second + ":";
        }
        out += a.name;
        out += "=\"";
        out += escape_attribute(a.value);
        out += '"';
    }
    if (e.content.empty()) {
        out += "/>";
        return;
    }
    out += '>';
    for (const auto& c : e.content) {
        if (const auto* s = std::get_if<std::string>(&c)) {
            out += escape_text(*s);
        } else {
            // Prefix declarations are scoped to the element that introduced them.
            auto scoped = prefixes;
            write_canonical(*std::get<std::unique_ptr<Element>>(c), e.ns, scoped, out);
        }
    }
    out += "</";
    out += e.name;
    out += '>';
}

}  // namespace

std::string canonicalize(const Element& element) {
    std::string out;
    std::map<std::string, std::string> prefixes;
    write_canonical(element, std::string{"\x01"}, prefixes, out);
    return out;
}

Writer::Writer() { out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"; }

void Writer::close_start() {
    if (open_start_) {
        out_ += '>';
        open_start_ = false;
    }
}

void Writer::start(std::string_view qname,
                   std::initializer_list<std::pair<std::string_view, std::string_view>> attrs) {
    close_start();
    out_ += '<';
    out_ += qname;
    for (const auto& [name, value] : attrs) attr(name, value);
    open_start_ = true;
}

void Writer::attr(std::string_view name, std::string_view value) {
    out_ += ' ';
    out_ += name;
    out_ += "=\"";
    out_ += escape_attribute(value);
    out_ += '"';
}

void Writer::text(std::string_view text) {
    close_start();
    out_ += escape_text(text);
}

void Writer::raw(std::string_view fragment) {
    close_start();
    out_ += fragment;
}

void Writer::end(std::string_view qname) {
    if (open_start_) {
        out_ += "/>";
        open_start_ = false;
        return;
    }
    out_ += "</";
    out_ += qname;
    out_ += '>';
}

void Writer::leaf(std::string_view qname, std::string_view text,
                  std::initializer_list<std::pair<std::string_view, std::string_view>> attrs) {
    start(qname, attrs);
    this->text(text);
    end(qname);
}

}  // namespace oaisim::xml
