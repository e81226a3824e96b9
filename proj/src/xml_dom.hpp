#pragma once

// Minimal namespace-aware DOM built on expat. Internal to the library.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oaisim::xml {

struct Attribute {
    std::string ns;  // empty for unqualified attributes
    std::string name;
    std::string value;
};

struct Element;
using Content = std::variant<std::string, std::unique_ptr<Element>>;

struct Element {
    std::string ns;
    std::string name;
    std::vector<Attribute> attributes;
    std::vector<Content> content;
    std::size_t offset = 0;  // byte offset of the start tag

    bool is(std::string_view want_ns, std::string_view want_name) const {
        return ns == want_ns && name == want_name;
    }
    const std::string* attribute(std::string_view attr_name, std::string_view attr_ns = {}) const;
    /// Concatenated character data of direct children.
    std::string text() const;
    std::vector<const Element*> children() const;
    const Element* child(std::string_view want_ns, std::string_view want_name) const;
};

/// Throws ParseError with the byte offset on malformed input.
std::unique_ptr<Element> parse(std::string_view document);

/// Serializes a subtree with every namespace it uses declared on the subtree root,
/// so the result is a self-contained well-formed fragment.
std::string canonicalize(const Element& element);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

/// Tiny streaming writer; callers are responsible for balanced start/end calls.
class Writer {
public:
    Writer();
    void start(std::string_view qname,
               std::initializer_list<std::pair<std::string_view, std::string_view>> attrs = {});
    void attr(std::string_view name, std::string_view value);
    void text(std::string_view text);
    void raw(std::string_view fragment);
    void end(std::string_view qname);
    void leaf(std::string_view qname, std::string_view text,
              std::initializer_list<std::pair<std::string_view, std::string_view>> attrs = {});
    std::string take() { close_start(); return std::move(out_); }

private:
    void close_start();
    std::string out_;
    bool open_start_ = false;
};

}  // namespace oaisim::xml
