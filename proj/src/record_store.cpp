#include "oaisim/record_store.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "oaisim/error.hpp"
#include "oaisim/oai_xml.hpp"
#include "oaisim/timefmt.hpp"
#include "oaisim/url.hpp"

namespace oaisim {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kNoScheme = "%noscheme";
constexpr std::string_view kStaleMarker = ".stale";
constexpr std::string_view kComputedMarker = ".computed";
constexpr std::size_t kMaxFileName = 240;

std::string encode_segment(std::string_view segment) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (std::size_t i = 0; i < segment.size(); ++i) {
        const auto c = static_cast<unsigned char>(segment[i]);
        const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                           c == '-' || c == '_' || (c == '.' && i != 0);
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    if (out.size() > kMaxFileName) throw StorageError("identifier segment too long for a file name: " + std::string(segment));
    return out;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(std::string_view text, std::string_view what) {
    const std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw StorageError("malformed " + std::string(what) + " value '" + s + "'");
    return v;
}

/// Calls fn(term, value) for every "term<TAB>value" line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = text.substr(0, nl);
        if (!line.empty()) {
            const auto tab = line.find('\t');
            if (tab == std::string_view::npos || tab == 0) throw StorageError("malformed line '" + std::string(line) + "'");
            fn(line.substr(0, tab), line.substr(tab + 1));
        }
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
}

bool in_set(const std::vector<std::string>& specs, const std::string& set) {
    for (const auto& spec : specs)
        if (spec == set || (spec.size() > set.size() && spec.compare(0, set.size(), set) == 0 && spec[set.size()] == ':'))
            return true;
    return false;
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw StorageError("cannot create " + path.parent_path().string() + ": " + ec.message());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw StorageError("short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw StorageError("cannot rename into " + path.string() + ": " + ec.message());
}

fs::path relative_path_for(std::string_view identifier) {
    if (identifier.empty()) throw ValidationError("empty identifier");
    constexpr std::string_view kScheme = "oai:";
    if (identifier.substr(0, kScheme.size()) == kScheme) {
        const std::string_view rest = identifier.substr(kScheme.size());
        const auto colon = rest.find(':');
        if (colon != std::string_view::npos && colon > 0 && colon + 1 < rest.size())
            return fs::path(encode_segment(rest.substr(0, colon))) / encode_segment(rest.substr(colon + 1));
    }
    return fs::path(std::string(kNoScheme)) / encode_segment(identifier);
}

std::string identifier_for(const fs::path& relative) {
    auto it = relative.begin();
    if (it == relative.end()) throw ValidationError("empty relative path");
    const std::string dir = it->string();
    if (++it == relative.end()) throw ValidationError("relative path lacks a file component");
    const std::string file = it->string();
    if (++it != relative.end()) throw ValidationError("relative path is too deep: " + relative.string());
    if (dir == kNoScheme) return percent_decode(file);
    return "oai:" + percent_decode(dir) + ":" + percent_decode(file);
}

std::string top_k_file_name(std::string_view identifier) {
    auto name = percent_encode(identifier);
    if (name.size() > kMaxFileName) throw StorageError("identifier too long for a file name");
    return name;
}

std::string format_tf(const TermFrequencyVector& tf) {
    std::string out;
    for (const auto& [term, count] : tf.counts) {
        out += term;
        out.push_back('\t');
        out += std::to_string(count);
        out.push_back('\n');
    }
    return out;
}

TermFrequencyVector parse_tf(std::string identifier, std::string_view text) {
    TermFrequencyVector tf;
    tf.identifier = std::move(identifier);
    for_each_line(text, [&](std::string_view term, std::string_view value) {
        const std::string v(value);
        char* end = nullptr;
        const unsigned long count = std::strtoul(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size() || count == 0 || count > 0xFFFFFFFFul)
            throw StorageError("malformed tf count '" + v + "'");
        tf.counts.emplace(std::string(term), static_cast<std::uint32_t>(count));
    });
    return tf;
}

std::string format_weights(const WeightedVector& w) {
    std::string out = "#norm\t" + format_double(w.norm) + "\n";
    for (const auto& [term, weight] : w.weights) {
        out += term;
        out.push_back('\t');
        out += format_double(weight);
        out.push_back('\n');
    }
    return out;
}

WeightedVector parse_weights(std::string identifier, std::string_view text) {
    WeightedVector w;
    w.identifier = std::move(identifier);
    bool saw_norm = false;
    for_each_line(text, [&](std::string_view term, std::string_view value) {
        if (term == "#norm") {
            w.norm = parse_double(value, "norm");
            saw_norm = true;
        } else {
            w.weights.emplace(std::string(term), parse_double(value, "weight"));
        }
    });
    if (!saw_norm) throw StorageError("weights file for " + w.identifier + " lacks a #norm header");
    return w;
}

RecordStore::RecordStore(fs::path root) {
    layout_.root = std::move(root);
    std::error_code ec;
    for (const auto& dir : {layout_.records(), layout_.tf(), layout_.weights()}) {
        fs::create_directories(dir, ec);
        if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    }
    for (const auto& entry : fs::recursive_directory_iterator(layout_.records())) {
        if (!entry.is_regular_file() || entry.path().extension() != ".xml") continue;
        const auto record = parse_record_document(read_file(entry.path()));
        index_[record.identifier] = {record.datestamp, record.set_specs, record.deleted};
    }
}

fs::path RecordStore::record_path(std::string_view identifier) const {
    auto p = layout_.records() / relative_path_for(identifier);
    p += ".xml";
    return p;
}

fs::path RecordStore::tf_path(std::string_view identifier) const {
    auto p = layout_.tf() / relative_path_for(identifier);
    p += ".tf";
    return p;
}

fs::path RecordStore::weights_path(std::string_view identifier) const {
    auto p = layout_.weights() / relative_path_for(identifier);
    p += ".w";
    return p;
}

void RecordStore::mark_stale() {
    if (fs::exists(layout_.weights() / kComputedMarker)) write_file_atomic(layout_.weights() / kStaleMarker, "");
}

std::uint64_t RecordStore::epoch() const {
    const auto path = layout_.root / "epoch";
    if (!fs::exists(path)) return 0;
    return std::strtoull(read_file(path).c_str(), nullptr, 10);
}

void RecordStore::bump_epoch() { write_file_atomic(layout_.root / "epoch", std::to_string(epoch() + 1) + "\n"); }

PutResult RecordStore::put_record(const MetadataRecord& record) {
    validate(record);
    std::lock_guard writer(writer_mutex_);
    PutResult result;
    result.path = record_path(record.identifier);
    const std::string content = serialize_record_document(record);
    if (fs::exists(result.path)) {
        const std::string existing_text = read_file(result.path);
        auto existing = parse_record_document(existing_text);
        if (existing.identifier != record.identifier)
            throw StorageError("path collision: " + record.identifier + " and " + existing.identifier + " map to " +
                               result.path.string());
        if (existing_text == content) {
            result.status = PutStatus::unchanged;
            return result;
        }
        result.status = PutStatus::replaced;
        result.previous = std::move(existing);
    }
    write_file_atomic(result.path, content);
    if (result.status == PutStatus::replaced) {
        std::error_code ec;
        fs::remove(tf_path(record.identifier), ec);
    }
    {
        std::unique_lock lock(index_mutex_);
        index_[record.identifier] = {record.datestamp, record.set_specs, record.deleted};
    }
    bump_epoch();
    mark_stale();
    return result;
}

MetadataRecord RecordStore::get_record(std::string_view identifier) const {
    if (!contains(identifier)) throw NotFound("no record " + std::string(identifier));
    return parse_record_document(read_file(record_path(identifier)));
}

bool RecordStore::contains(std::string_view identifier) const {
    std::shared_lock lock(index_mutex_);
    return index_.find(identifier) != index_.end();
}

std::size_t RecordStore::size() const {
    std::shared_lock lock(index_mutex_);
    return index_.size();
}

std::optional<RecordSummary> RecordStore::summary(std::string_view identifier) const {
    std::shared_lock lock(index_mutex_);
    const auto it = index_.find(identifier);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void RecordStore::put_tf(std::string_view identifier, const TermFrequencyVector& tf) {
    if (!contains(identifier)) throw NotFound("no record " + std::string(identifier));
    const auto path = tf_path(identifier);
    const std::string content = format_tf(tf);
    if (fs::exists(path) && read_file(path) == content) return;
    write_file_atomic(path, content);
    mark_stale();
}

TermFrequencyVector RecordStore::get_tf(std::string_view identifier) const {
    if (!contains(identifier)) throw NotFound("no record " + std::string(identifier));
    const auto path = tf_path(identifier);
    if (!fs::exists(path)) throw NotFound("no term frequencies for " + std::string(identifier) + "; run index");
    return parse_tf(std::string(identifier), read_file(path));
}

void RecordStore::put_weights(std::string_view identifier, const WeightedVector& w) {
    if (!fs::exists(tf_path(identifier))) throw NotFound("no term frequencies for " + std::string(identifier));
    double sum_sq = 0.0;
    for (const auto& [term, weight] : w.weights) {
        if (!(weight >= 0.0) || !std::isfinite(weight)) throw ValidationError("negative or non-finite weight");
        sum_sq += weight * weight;
    }
    const bool empty_ok = w.weights.empty() && w.norm == 0.0;
    if (!empty_ok && (std::abs(std::sqrt(sum_sq) - 1.0) > 1e-9 || !(w.norm > 0.0)))
        throw ValidationError("weights for " + std::string(identifier) + " are not cosine-normalized");
    write_file_atomic(weights_path(identifier), format_weights(w));
}

WeightedVector RecordStore::get_weights(std::string_view identifier) const {
    switch (derived_state()) {
        case DerivedState::absent: throw StaleError("no weights computed; run compute");
        case DerivedState::stale: throw StaleError("weights are stale; recompute required (run compute)");
        case DerivedState::fresh: break;
    }
    const auto path = weights_path(identifier);
    if (!fs::exists(path)) throw NotFound("no weights for " + std::string(identifier));
    return parse_weights(std::string(identifier), read_file(path));
}

std::vector<std::string> filter_identifiers(const SummaryIndex& index, const ListFilter& filter) {
    std::optional<std::int64_t> from, until;
    if (filter.from) {
        const auto stamp = parse_utc(*filter.from);
        if (!stamp) throw ValidationError("invalid from datestamp '" + *filter.from + "'");
        from = stamp->seconds;
    }
    if (filter.until) {
        const auto stamp = parse_utc(*filter.until);
        if (!stamp) throw ValidationError("invalid until datestamp '" + *filter.until + "'");
        until = stamp->seconds + (stamp->granularity == Granularity::day ? 86399 : 0);
    }
    std::vector<std::string> out;
    for (const auto& [id, info] : index) {
        if (from || until) {
            const auto stamp = parse_utc(info.datestamp);
            if (!stamp) continue;
            // A day-granularity datestamp covers the whole day.
            const auto last = stamp->seconds + (stamp->granularity == Granularity::day ? 86399 : 0);
            if (from && last < *from) continue;
            if (until && stamp->seconds > *until) continue;
        }
        if (filter.set && !in_set(info.set_specs, *filter.set)) continue;
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> RecordStore::list_identifiers(const ListFilter& filter) const {
    std::shared_lock lock(index_mutex_);
    return filter_identifiers(index_, filter);
}

SummaryIndex RecordStore::summaries() const {
    std::shared_lock lock(index_mutex_);
    return index_;
}

std::vector<std::string> RecordStore::set_specs() const {
    std::set<std::string> specs;
    std::shared_lock lock(index_mutex_);
    for (const auto& [id, info] : index_) specs.insert(info.set_specs.begin(), info.set_specs.end());
    return {specs.begin(), specs.end()};
}

std::optional<std::string> RecordStore::earliest_datestamp() const {
    std::optional<std::int64_t> earliest;
    std::shared_lock lock(index_mutex_);
    for (const auto& [id, info] : index_)
        if (const auto stamp = parse_utc(info.datestamp); stamp && (!earliest || stamp->seconds < *earliest))
            earliest = stamp->seconds;
    if (!earliest) return std::nullopt;
    return format_utc(*earliest);
}

DerivedState RecordStore::derived_state() const {
    if (fs::exists(layout_.weights() / kStaleMarker)) return DerivedState::stale;
    if (fs::exists(layout_.weights() / kComputedMarker)) return DerivedState::fresh;
    return DerivedState::absent;
}

std::uint64_t RecordStore::begin_compute() {
    std::lock_guard writer(writer_mutex_);
    write_file_atomic(layout_.weights() / kStaleMarker, "");
    return epoch();
}

void RecordStore::finish_compute(std::uint64_t started_epoch, const std::string& computed_at) {
    std::lock_guard writer(writer_mutex_);
    write_file_atomic(layout_.weights() / kComputedMarker, computed_at + "\n");
    if (epoch() == started_epoch) fs::remove(layout_.weights() / kStaleMarker);
}

std::optional<std::string> RecordStore::computed_at() const {
    const auto path = layout_.weights() / kComputedMarker;
    if (!fs::exists(path)) return std::nullopt;
    auto text = read_file(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

WeightedCorpus load_weighted_corpus(const RecordStore& store) {
    std::vector<WeightedVector> docs;
    for (const auto& id : store.list_identifiers()) {
        const auto info = store.summary(id);
        if (!info || info->deleted) continue;
        docs.push_back(store.get_weights(id));
    }
    if (store.derived_state() != DerivedState::fresh)
        throw StaleError("weights changed while loading; recompute required (run compute)");
    return WeightedCorpus(std::move(docs));
}

}  // namespace oaisim
