#include "oaisim/text_pipeline.hpp"

#include <fstream>
#include <sstream>

#include "oaisim/error.hpp"

namespace oaisim {

namespace unicode {

char32_t decode(std::string_view text, std::size_t& pos) {
    constexpr char32_t kReplacement = 0xFFFD;
    const auto lead = static_cast<unsigned char>(text[pos]);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    std::size_t length = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) { length = 2; cp = lead & 0x1F; min = 0x80; }
    else if ((lead & 0xF0) == 0xE0) { length = 3; cp = lead & 0x0F; min = 0x800; }
    else if ((lead & 0xF8) == 0xF0) { length = 4; cp = lead & 0x07; min = 0x10000; }
    else { ++pos; return kReplacement; }
    if (pos + length > text.size()) { ++pos; return kReplacement; }
    for (std::size_t i = 1; i < length; ++i) {
        const auto cont = static_cast<unsigned char>(text[pos + i]);
        if ((cont & 0xC0) != 0x80) { ++pos; return kReplacement; }
        cp = (cp << 6) | (cont & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) { ++pos; return kReplacement; }
    pos += length;
    return cp;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Block-level approximation of Unicode letter/digit/mark classes: letters,
// digits and combining marks count as word characters; punctuation, symbol,
// space, emoji and private-use blocks do not.
bool is_alnum(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp < 0x100) return cp != 0xD7 && cp != 0xF7;
    if (cp < 0x370) return true;
    if (cp < 0x400) return cp != 0x375 && cp != 0x37E && cp != 0x384 && cp != 0x385 && cp != 0x387;
    if (cp < 0x530) return cp != 0x482;
    if (cp < 0x2000) {
        switch (cp) {
            case 0x058A: case 0x05BE: case 0x05C0: case 0x05C3: case 0x05F3: case 0x05F4:
            case 0x060C: case 0x061B: case 0x061F: case 0x066A: case 0x066B: case 0x066C:
            case 0x066D: case 0x06D4: case 0x0964: case 0x0965: case 0x0E4F: case 0x0E5A:
            case 0x0E5B: case 0x1680:
                return false;
            default:
                return true;
        }
    }
    if (cp < 0x2C00) return false;
    if (cp < 0x2E00) return true;
    if (cp < 0x2E80) return false;
    if (cp < 0x2FF0) return true;
    if (cp < 0x3040) return cp >= 0x3005 && cp <= 0x3007;
    if (cp < 0xD800) return cp != 0x30FB;
    if (cp < 0xF900) return false;
    if (cp < 0xFE00) return cp != 0xFD3E && cp != 0xFD3F;
    if (cp < 0xFE10) return true;
    if (cp < 0xFE70) return false;
    if (cp < 0xFF00) return cp != 0xFEFF;
    if (cp < 0xFFF0)
        return (cp >= 0xFF10 && cp <= 0xFF19) || (cp >= 0xFF21 && cp <= 0xFF3A) ||
               (cp >= 0xFF41 && cp <= 0xFF5A) || (cp >= 0xFF66 && cp <= 0xFFDC);
    if (cp < 0x10000) return false;
    if (cp >= 0x1F000 && cp < 0x1FC00) return false;
    return cp < 0xE0000;
}

// Simple (one-to-one) lowercase mapping for Latin, Greek, Cyrillic and fullwidth Latin.
char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0xC0) return cp;
    if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
    if (cp == 0x130) return U'i';
    if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x386) return 0x3AC;
    if (cp >= 0x388 && cp <= 0x38A) return cp + 0x25;
    if (cp == 0x38C) return 0x3CC;
    if (cp == 0x38E || cp == 0x38F) return cp + 0x3F;
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if ((cp >= 0x460 && cp <= 0x481) || (cp >= 0x48A && cp <= 0x4BF) || (cp >= 0x4D0 && cp <= 0x52F))
        return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 0x20;
    return cp;
}

}  // namespace unicode

std::uint64_t TermFrequencyVector::total() const {
    std::uint64_t sum = 0;
    for (const auto& [term, count] : counts) sum += count;
    return sum;
}

FieldSelection FieldSelection::defaults() { return {{"title", "description", "subject", "creator"}}; }

FieldSelection FieldSelection::parse(std::string_view list) {
    FieldSelection out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        std::string_view name = list.substr(0, comma);
        while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
        if (!name.empty()) {
            if (!is_dublin_core_element(name))
                throw ValidationError("'" + std::string(name) + "' is not a Dublin Core element");
            out.elements.emplace_back(name);
        }
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    return out;
}

bool FieldSelection::contains(std::string_view element) const {
    for (const auto& e : elements)
        if (e == element) return true;
    return false;
}

Stopwords Stopwords::from_text(std::string_view text) {
    Stopwords out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::string lowered;
        for (std::size_t pos = 0; pos < line.size();) unicode::append(lowered, unicode::to_lower(unicode::decode(line, pos)));
        out.words_.insert(std::move(lowered));
    }
    return out;
}

Stopwords Stopwords::defaults() { return from_text(default_stopword_text()); }

Stopwords Stopwords::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read stopword file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t length = 0;
    auto flush = [&] {
        if (length >= 2 && !stopwords_.contains(current)) tokens.push_back(current);
        current.clear();
        length = 0;
    };
    for (std::size_t pos = 0; pos < text.size();) {
        const char32_t cp = unicode::decode(text, pos);
        if (unicode::is_alnum(cp)) {
            unicode::append(current, unicode::to_lower(cp));
            ++length;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::string extract_text(const MetadataRecord& record, const FieldSelection& fields) {
    if (record.deleted) throw ValidationError("cannot extract text from deleted record " + record.identifier);
    std::string out;
    for (const auto& field : record.dc_fields) {
        if (!fields.contains(field.element)) continue;
        if (!out.empty()) out.push_back(' ');
        out += field.value;
    }
    return out;
}

TermFrequencyVector term_frequencies(std::string identifier, std::span<const std::string> terms) {
    TermFrequencyVector tf;
    tf.identifier = std::move(identifier);
    for (const auto& term : terms) ++tf.counts[term];
    return tf;
}

TermFrequencyVector TextPipeline::run(const MetadataRecord& record) const {
    if (record.deleted) return TermFrequencyVector{record.identifier, {}};
    const auto terms = tokenizer_.tokenize(extract_text(record, fields_));
    return term_frequencies(record.identifier, terms);
}

}  // namespace oaisim
