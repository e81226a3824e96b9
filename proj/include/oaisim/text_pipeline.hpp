#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "oaisim/record.hpp"

namespace oaisim {

/// Sparse term -> occurrence count for one record. Terms iterate in byte order.
struct TermFrequencyVector {
    std::string identifier;
    std::map<std::string, std::uint32_t> counts;

    std::uint64_t total() const;
    bool operator==(const TermFrequencyVector&) const = default;
};

/// Dublin Core elements whose values feed the index.
struct FieldSelection {
    std::vector<std::string> elements;

    static FieldSelection defaults();  // title, description, subject, creator
    /// Comma-separated element names; throws ValidationError on a non-DC name.
    static FieldSelection parse(std::string_view list);
    bool contains(std::string_view element) const;
};

class Stopwords {
public:
    static Stopwords defaults();
    /// One word per line; blank lines and '#' comments ignored.
    static Stopwords from_file(const std::filesystem::path& path);
    static Stopwords from_text(std::string_view text);

    bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

/// The shipped stopword list, one word per line.
std::string_view default_stopword_text();

/// Lowercases, splits on non-alphanumeric code points, drops tokens shorter
/// than two code points and stopwords. Numeric tokens are kept.
class Tokenizer {
public:
    explicit Tokenizer(Stopwords stopwords = Stopwords::defaults()) : stopwords_(std::move(stopwords)) {}
    std::vector<std::string> tokenize(std::string_view text) const;

private:
    Stopwords stopwords_;
};

/// Space-joined values of the selected fields, in document order.
/// Throws ValidationError for a deleted record.
std::string extract_text(const MetadataRecord& record, const FieldSelection& fields);

TermFrequencyVector term_frequencies(std::string identifier, std::span<const std::string> terms);

class TextPipeline {
public:
    TextPipeline(FieldSelection fields = FieldSelection::defaults(), Tokenizer tokenizer = Tokenizer())
        : fields_(std::move(fields)), tokenizer_(std::move(tokenizer)) {}

    TermFrequencyVector run(const MetadataRecord& record) const;

private:
    FieldSelection fields_;
    Tokenizer tokenizer_;
};

namespace unicode {

/// Decodes one UTF-8 sequence at `pos`, advancing it. Malformed input yields U+FFFD.
char32_t decode(std::string_view text, std::size_t& pos);
void append(std::string& out, char32_t cp);
bool is_alnum(char32_t cp);
char32_t to_lower(char32_t cp);

}  // namespace unicode

}  // namespace oaisim
