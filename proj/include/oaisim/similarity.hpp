#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oaisim/kernels.hpp"
#include "oaisim/record.hpp"
#include "oaisim/text_pipeline.hpp"

namespace oaisim {

/// Cosine-normalized tf-idf weights. `norm` is the Euclidean norm of the raw
/// tf*idf components before normalization; zero for an empty vector.
struct WeightedVector {
    std::string identifier;
    std::map<std::string, double> weights;
    double norm = 0.0;
    bool operator==(const WeightedVector&) const = default;
};

struct CollectionStats {
    std::uint64_t n_docs = 0;
    std::map<std::string, std::uint32_t> df;
};

struct SimilarityPair {
    std::string id_a;  // id_a < id_b in byte order
    std::string id_b;
    double score = 0.0;
};

/// Throws ValidationError on an empty corpus.
CollectionStats collection_stats(std::span<const TermFrequencyVector> corpus);

/// Natural-log inverse document frequency, ln(N / df). Never persisted.
/// Throws NotFound for a term outside the collection.
double idf(std::string_view term, const CollectionStats& stats);

/// tf * idf, divided by the Euclidean norm. Zero-weight terms are dropped.
WeightedVector weight_vector(const TermFrequencyVector& tf, const CollectionStats& stats);

/// Dot product over shared terms, clamped to [0,1]; 0 if either side is empty.
double cosine(const WeightedVector& a, const WeightedVector& b);

/// Immutable, identifier-ordered corpus of weighted vectors with interned term ids.
class WeightedCorpus {
public:
    WeightedCorpus() = default;
    /// Sorts by identifier; throws ValidationError on duplicate identifiers.
    explicit WeightedCorpus(std::vector<WeightedVector> documents);

    std::size_t size() const { return documents_.size(); }
    std::size_t term_count() const { return term_count_; }
    const WeightedVector& document(std::size_t i) const { return documents_[i]; }
    const std::string& identifier(std::size_t i) const { return documents_[i].identifier; }
    std::optional<std::size_t> index_of(std::string_view identifier) const;

    std::span<const std::uint32_t> term_ids(std::size_t i) const;
    std::span<const double> weights(std::size_t i) const;

    /// Score of (i, j) computed in canonical orientation (lower index scattered),
    /// so it equals the value the pair loop produces.
    double score(std::size_t i, std::size_t j, kernels::Isa isa = kernels::preferred()) const;

    /// Scores of document `i` against every document (self entry is 0).
    std::vector<double> row(std::size_t i, kernels::Isa isa = kernels::preferred()) const;

private:
    std::vector<WeightedVector> documents_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> term_ids_;
    std::vector<double> weights_;
    std::size_t term_count_ = 0;
};

enum class PairMode { score, count_only };

struct PairOptions {
    PairMode mode = PairMode::score;
    unsigned jobs = 1;
    kernels::Isa isa = kernels::preferred();
};

struct IndexPair {
    std::uint32_t a = 0;  // a < b, so identifier(a) < identifier(b)
    std::uint32_t b = 0;
    double score = 0.0;
};

/// Upper-triangular pass over every unordered pair, delivered to `sink` in
/// (a ascending, b ascending) order regardless of `jobs`. Returns the pair count.
/// In count_only mode no scores are computed and every score is 0.
std::uint64_t all_pairs(const WeightedCorpus& corpus, const PairOptions& options,
                        const std::function<void(const IndexPair&)>& sink);

/// Same pass, as identifier pairs.
std::uint64_t all_pairs(const WeightedCorpus& corpus, const PairOptions& options,
                        const std::function<void(const SimilarityPair&)>& sink);

/// Keeps the k best counterparts per document from a stream of pairs.
class TopKCollector {
public:
    TopKCollector(std::size_t documents, std::size_t k);
    void offer(const IndexPair& pair);
    /// Best-first: score descending, then index (identifier) ascending.
    std::vector<std::pair<std::uint32_t, double>> best(std::size_t document) const;

private:
    void push(std::uint32_t owner, std::uint32_t other, double score);
    std::size_t k_;
    std::vector<std::vector<std::pair<double, std::uint32_t>>> heaps_;
};

/// The k highest-scoring counterparts of `identifier`, computed from weights.
/// Throws NotFound for an unknown identifier.
std::vector<SimilarityMatch> top_k(const WeightedCorpus& corpus, std::string_view identifier, std::size_t k,
                                   kernels::Isa isa = kernels::preferred());

inline constexpr double kPaperPerPairSeconds = 0.0036;

std::uint64_t pair_count(std::uint64_t n);

/// per_pair_seconds * n(n-1)/2.
double estimate_runtime(std::uint64_t n, double per_pair_seconds);

struct DurationParts {
    std::uint64_t years = 0;  // 365-day years
    std::uint64_t days = 0;
    std::uint64_t hours = 0;
    std::uint64_t minutes = 0;
    std::uint64_t seconds = 0;  // fractional seconds truncated

    std::uint64_t total_seconds() const;
};

DurationParts split_duration(double seconds);

/// "2 days-2 hours-5 minutes-30 seconds"; zero units are omitted.
std::string format_duration(double seconds);

/// Inverse of format_duration; throws ValidationError on malformed text.
DurationParts parse_duration(std::string_view text);

/// "≈17.8 seconds" style: one decimal in the largest whole unit.
std::string format_approximate(double seconds);

}  // namespace oaisim
