#include "oaisim/similarity.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

#include "oaisim/error.hpp"

namespace oaisim {

namespace {

double clamp_unit(double x) { return std::min(1.0, std::max(0.0, x)); }

// Pairs held in memory per batch of rows before they are emitted in order.
constexpr std::uint64_t kBatchPairs = std::uint64_t{1} << 22;

bool better(const std::pair<double, std::uint32_t>& x, const std::pair<double, std::uint32_t>& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
}

}  // namespace

CollectionStats collection_stats(std::span<const TermFrequencyVector> corpus) {
    if (corpus.empty()) throw ValidationError("collection statistics need at least one document");
    CollectionStats stats;
    stats.n_docs = corpus.size();
    for (const auto& doc : corpus)
        for (const auto& [term, count] : doc.counts)
            if (count > 0) ++stats.df[term];
    return stats;
}

double idf(std::string_view term, const CollectionStats& stats) {
    const auto it = stats.df.find(std::string(term));
    if (it == stats.df.end() || it->second == 0)
        throw NotFound("term '" + std::string(term) + "' does not occur in the collection");
    return std::log(static_cast<double>(stats.n_docs) / static_cast<double>(it->second));
}

WeightedVector weight_vector(const TermFrequencyVector& tf, const CollectionStats& stats) {
    WeightedVector out;
    out.identifier = tf.identifier;
    double sum_sq = 0.0;
    for (const auto& [term, count] : tf.counts) {
        const double w = static_cast<double>(count) * idf(term, stats);
        if (w > 0.0) {
            out.weights.emplace_hint(out.weights.end(), term, w);
            sum_sq += w * w;
        }
    }
    if (sum_sq == 0.0) {
        out.weights.clear();
        return out;
    }
    out.norm = std::sqrt(sum_sq);
    for (auto& [term, w] : out.weights) w /= out.norm;
    return out;
}

double cosine(const WeightedVector& a, const WeightedVector& b) {
    double sum = 0.0;
    auto ia = a.weights.begin();
    auto ib = b.weights.begin();
    while (ia != a.weights.end() && ib != b.weights.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            sum += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return clamp_unit(sum);
}

WeightedCorpus::WeightedCorpus(std::vector<WeightedVector> documents) : documents_(std::move(documents)) {
    std::sort(documents_.begin(), documents_.end(),
              [](const WeightedVector& x, const WeightedVector& y) { return x.identifier < y.identifier; });
    for (std::size_t i = 1; i < documents_.size(); ++i)
        if (documents_[i].identifier == documents_[i - 1].identifier)
            throw ValidationError("duplicate identifier in corpus: " + documents_[i].identifier);

    std::set<std::string_view> vocabulary;
    for (const auto& doc : documents_)
        for (const auto& [term, w] : doc.weights) vocabulary.insert(term);
    std::map<std::string_view, std::uint32_t> ids;
    for (const auto term : vocabulary) ids.emplace(term, static_cast<std::uint32_t>(ids.size()));
    term_count_ = ids.size();

    for (const auto& doc : documents_) {
        for (const auto& [term, w] : doc.weights) {
            term_ids_.push_back(ids.at(term));
            weights_.push_back(w);
        }
        offsets_.push_back(term_ids_.size());
    }
}

std::optional<std::size_t> WeightedCorpus::index_of(std::string_view identifier) const {
    const auto it = std::lower_bound(documents_.begin(), documents_.end(), identifier,
                                     [](const WeightedVector& d, std::string_view id) { return d.identifier < id; });
    if (it == documents_.end() || it->identifier != identifier) return std::nullopt;
    return static_cast<std::size_t>(it - documents_.begin());
}

std::span<const std::uint32_t> WeightedCorpus::term_ids(std::size_t i) const {
    return {term_ids_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::span<const double> WeightedCorpus::weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

namespace {

void scatter(std::vector<double>& dense, std::span<const std::uint32_t> ids, std::span<const double> w) {
    for (std::size_t t = 0; t < ids.size(); ++t) dense[ids[t]] = w[t];
}

void unscatter(std::vector<double>& dense, std::span<const std::uint32_t> ids) {
    for (const auto id : ids) dense[id] = 0.0;
}

}  // namespace

double WeightedCorpus::score(std::size_t i, std::size_t j, kernels::Isa isa) const {
    const std::size_t lo = std::min(i, j);
    const std::size_t hi = std::max(i, j);
    std::vector<double> dense(term_count_, 0.0);
    scatter(dense, term_ids(lo), weights(lo));
    return clamp_unit(kernels::select(isa)(dense.data(), term_ids(hi), weights(hi)));
}

std::vector<double> WeightedCorpus::row(std::size_t i, kernels::Isa isa) const {
    const auto dot = kernels::select(isa);
    std::vector<double> out(size(), 0.0);
    std::vector<double> dense(term_count_, 0.0);
    scatter(dense, term_ids(i), weights(i));
    for (std::size_t j = i + 1; j < size(); ++j) out[j] = clamp_unit(dot(dense.data(), term_ids(j), weights(j)));
    unscatter(dense, term_ids(i));
    for (std::size_t j = 0; j < i; ++j) {
        scatter(dense, term_ids(j), weights(j));
        out[j] = clamp_unit(dot(dense.data(), term_ids(i), weights(i)));
        unscatter(dense, term_ids(j));
    }
    return out;
}

std::uint64_t all_pairs(const WeightedCorpus& corpus, const PairOptions& options,
                        const std::function<void(const IndexPair&)>& sink) {
    const std::size_t n = corpus.size();
    std::uint64_t emitted = 0;
    if (options.mode == PairMode::count_only) {
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b) {
                if (sink) sink({a, b, 0.0});
                ++emitted;
            }
        return emitted;
    }

    const auto dot = kernels::select(options.isa);
    const unsigned jobs = std::max(1u, options.jobs);
    std::size_t first = 0;
    while (first < n) {
        std::size_t last = first;
        std::uint64_t budget = 0;
        while (last < n && (budget == 0 || budget < kBatchPairs)) {
            budget += n - last - 1;
            ++last;
        }

        std::vector<std::vector<double>> rows(last - first);
        std::atomic<std::size_t> next{first};
        auto worker = [&] {
            std::vector<double> dense(corpus.term_count(), 0.0);
            for (;;) {
                const std::size_t a = next.fetch_add(1);
                if (a >= last) break;
                scatter(dense, corpus.term_ids(a), corpus.weights(a));
                auto& out = rows[a - first];
                out.resize(n - a - 1);
                for (std::size_t b = a + 1; b < n; ++b)
                    out[b - a - 1] = clamp_unit(dot(dense.data(), corpus.term_ids(b), corpus.weights(b)));
                unscatter(dense, corpus.term_ids(a));
            }
        };
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::jthread> threads;
            for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
        }

        for (std::size_t a = first; a < last; ++a) {
            const auto& out = rows[a - first];
            for (std::size_t b = a + 1; b < n; ++b) {
                if (sink) sink({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), out[b - a - 1]});
                ++emitted;
            }
        }
        first = last;
    }
    return emitted;
}

std::uint64_t all_pairs(const WeightedCorpus& corpus, const PairOptions& options,
                        const std::function<void(const SimilarityPair&)>& sink) {
    return all_pairs(corpus, options, [&](const IndexPair& p) {
        sink({corpus.identifier(p.a), corpus.identifier(p.b), p.score});
    });
}

TopKCollector::TopKCollector(std::size_t documents, std::size_t k) : k_(k), heaps_(documents) {}

void TopKCollector::push(std::uint32_t owner, std::uint32_t other, double score) {
    if (k_ == 0) return;
    auto& heap = heaps_[owner];
    const std::pair<double, std::uint32_t> entry{score, other};
    if (heap.size() < k_) {
        heap.push_back(entry);
        std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(entry, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = entry;
        std::push_heap(heap.begin(), heap.end(), better);
    }
}

void TopKCollector::offer(const IndexPair& pair) {
    push(pair.a, pair.b, pair.score);
    push(pair.b, pair.a, pair.score);
}

std::vector<std::pair<std::uint32_t, double>> TopKCollector::best(std::size_t document) const {
    auto sorted = heaps_[document];
    std::sort(sorted.begin(), sorted.end(), better);
    std::vector<std::pair<std::uint32_t, double>> out;
    out.reserve(sorted.size());
    for (const auto& [score, other] : sorted) out.emplace_back(other, score);
    return out;
}

std::vector<SimilarityMatch> top_k(const WeightedCorpus& corpus, std::string_view identifier, std::size_t k,
                                   kernels::Isa isa) {
    const auto index = corpus.index_of(identifier);
    if (!index) throw NotFound("identifier not in similarity corpus: " + std::string(identifier));
    const auto scores = corpus.row(*index, isa);
    std::vector<std::pair<double, std::uint32_t>> candidates;
    candidates.reserve(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (j != *index) candidates.emplace_back(scores[j], static_cast<std::uint32_t>(j));
    const std::size_t keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      better);
    std::vector<SimilarityMatch> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i)
        out.push_back({corpus.identifier(candidates[i].second), candidates[i].first});
    return out;
}

std::uint64_t pair_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

double estimate_runtime(std::uint64_t n, double per_pair_seconds) {
    return per_pair_seconds * static_cast<double>(pair_count(n));
}

namespace {

constexpr std::uint64_t kMinute = 60;
constexpr std::uint64_t kHour = 60 * kMinute;
constexpr std::uint64_t kDay = 24 * kHour;
constexpr std::uint64_t kYear = 365 * kDay;

struct Unit {
    std::string_view singular;
    std::uint64_t DurationParts::*field;
    std::uint64_t seconds;
};

constexpr Unit kUnits[] = {
    {"year", &DurationParts::years, kYear},     {"day", &DurationParts::days, kDay},
    {"hour", &DurationParts::hours, kHour},     {"minute", &DurationParts::minutes, kMinute},
    {"second", &DurationParts::seconds, 1},
};

}  // namespace

std::uint64_t DurationParts::total_seconds() const {
    return years * kYear + days * kDay + hours * kHour + minutes * kMinute + seconds;
}

DurationParts split_duration(double seconds) {
    DurationParts parts;
    if (!(seconds > 0.0)) return parts;
    auto remaining = static_cast<std::uint64_t>(std::floor(seconds));
    for (const auto& unit : kUnits) {
        parts.*unit.field = remaining / unit.seconds;
        remaining %= unit.seconds;
    }
    return parts;
}

std::string format_duration(double seconds) {
    const auto parts = split_duration(seconds);
    std::string out;
    for (const auto& unit : kUnits) {
        const auto value = parts.*unit.field;
        if (value == 0) continue;
        if (!out.empty()) out.push_back('-');
        out += std::to_string(value) + " " + std::string(unit.singular) + (value == 1 ? "" : "s");
    }
    return out.empty() ? "0 seconds" : out;
}

DurationParts parse_duration(std::string_view text) {
    DurationParts parts;
    bool any = false;
    while (!text.empty()) {
        const auto dash = text.find('-');
        std::string_view piece = text.substr(0, dash);
        while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
        while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
        const auto space = piece.find(' ');
        if (space == std::string_view::npos) throw ValidationError("malformed duration component");
        const std::string number(piece.substr(0, space));
        std::string_view name = piece.substr(space + 1);
        if (name.ends_with('s')) name.remove_suffix(1);
        bool matched = false;
        for (const auto& unit : kUnits) {
            if (unit.singular == name) {
                std::uint64_t value = 0;
                const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
                if (ec != std::errc{} || end != number.data() + number.size())
                    throw ValidationError("bad duration count '" + number + "'");
                parts.*unit.field = value;
                matched = true;
            }
        }
        if (!matched) throw ValidationError("unknown duration unit '" + std::string(name) + "'");
        any = true;
        if (dash == std::string_view::npos) break;
        text.remove_prefix(dash + 1);
    }
    if (!any) throw ValidationError("empty duration");
    return parts;
}

std::string format_approximate(double seconds) {
    const Unit* chosen = &kUnits[4];
    for (const auto& unit : kUnits) {
        if (seconds >= static_cast<double>(unit.seconds)) {
            chosen = &unit;
            break;
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "\xE2\x89\x88%.1f %.*ss", seconds / static_cast<double>(chosen->seconds),
                  static_cast<int>(chosen->singular.size()), chosen->singular.data());
    return buf;
}

}  // namespace oaisim
