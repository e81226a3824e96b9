#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "oaisim/record.hpp"
#include "oaisim/similarity.hpp"
#include "oaisim/text_pipeline.hpp"

namespace oaisim {

struct StoreLayout {
    std::filesystem::path root;
    std::filesystem::path records_dir = "records";
    std::filesystem::path tf_dir = "tf_metadata";
    std::filesystem::path weights_dir = "weights_metadata";

    std::filesystem::path records() const { return root / records_dir; }
    std::filesystem::path tf() const { return root / tf_dir; }
    std::filesystem::path weights() const { return root / weights_dir; }
    std::filesystem::path similarities() const { return root / "similarities.txt"; }
    std::filesystem::path top_k() const { return root / "top_k"; }
};

/// Identifier -> extension-less relative path, e.g.
/// "oai:ltrs.larc.nasa.gov:rdp3195.tex" -> "ltrs.larc.nasa.gov/rdp3195.tex".
/// Injective; identifiers without an "oai:<repo>:" prefix live under "%noscheme".
std::filesystem::path relative_path_for(std::string_view identifier);

/// Inverse of relative_path_for. Throws ValidationError for a path it never produces.
std::string identifier_for(const std::filesystem::path& relative);

/// Flat file name for the top-k directory.
std::string top_k_file_name(std::string_view identifier);

/// Text form of tf and weights files: "term<TAB>value" lines, terms byte-sorted;
/// weights files start with a "#norm<TAB>value" header.
std::string format_tf(const TermFrequencyVector& tf);
TermFrequencyVector parse_tf(std::string identifier, std::string_view text);
std::string format_weights(const WeightedVector& w);
WeightedVector parse_weights(std::string identifier, std::string_view text);

/// Whole-file read; throws StorageError.
std::string read_file(const std::filesystem::path& path);
/// Writes through a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

enum class PutStatus { created, unchanged, replaced };

struct PutResult {
    std::filesystem::path path;
    PutStatus status = PutStatus::created;
    std::optional<MetadataRecord> previous;  // set when status == replaced
};

/// Freshness of the weights tree and similarity outputs relative to the corpus.
enum class DerivedState { absent, stale, fresh };

struct ListFilter {
    std::optional<std::string> from;
    std::optional<std::string> until;
    std::optional<std::string> set;
    bool operator==(const ListFilter&) const = default;
};

struct RecordSummary {
    std::string datestamp;
    std::vector<std::string> set_specs;
    bool deleted = false;
};

using SummaryIndex = std::map<std::string, RecordSummary, std::less<>>;

/// Identifier-ascending subset of `index` matching `filter`.
/// Throws ValidationError on an unparseable from/until.
std::vector<std::string> filter_identifiers(const SummaryIndex& index, const ListFilter& filter);

/// Records plus derived tf and weights artifacts in three mirrored trees.
/// put_record is serialized through one writer lock; readers may run concurrently.
class RecordStore {
public:
    /// Creates the three trees under `root` if needed and indexes existing records.
    explicit RecordStore(std::filesystem::path root);

    const StoreLayout& layout() const { return layout_; }

    /// A replaced record loses its tf file until the next index run.
    PutResult put_record(const MetadataRecord& record);
    MetadataRecord get_record(std::string_view identifier) const;
    bool contains(std::string_view identifier) const;
    std::size_t size() const;

    void put_tf(std::string_view identifier, const TermFrequencyVector& tf);
    TermFrequencyVector get_tf(std::string_view identifier) const;

    /// Rejects vectors whose components are not unit-normalized.
    void put_weights(std::string_view identifier, const WeightedVector& w);
    /// Throws StaleError unless the derived state is fresh.
    WeightedVector get_weights(std::string_view identifier) const;

    /// Identifier-ascending; date filters compare against record datestamps.
    std::vector<std::string> list_identifiers(const ListFilter& filter = {}) const;
    std::optional<RecordSummary> summary(std::string_view identifier) const;
    std::vector<std::string> set_specs() const;
    std::optional<std::string> earliest_datestamp() const;
    SummaryIndex summaries() const;

    DerivedState derived_state() const;
    /// Counts corpus mutations; bumps on every created or replaced record.
    std::uint64_t epoch() const;
    /// Marks derived data stale for the duration of a recompute; returns the epoch it started at.
    std::uint64_t begin_compute();
    /// Clears staleness unless the corpus changed since begin_compute.
    void finish_compute(std::uint64_t started_epoch, const std::string& computed_at);
    std::optional<std::string> computed_at() const;

private:
    std::filesystem::path record_path(std::string_view identifier) const;
    std::filesystem::path tf_path(std::string_view identifier) const;
    std::filesystem::path weights_path(std::string_view identifier) const;
    void mark_stale();
    void bump_epoch();

    StoreLayout layout_;
    mutable std::shared_mutex index_mutex_;
    std::mutex writer_mutex_;
    SummaryIndex index_;
};

/// Loads every non-deleted record's weights. Throws StaleError unless fresh.
WeightedCorpus load_weighted_corpus(const RecordStore& store);

}  // namespace oaisim
