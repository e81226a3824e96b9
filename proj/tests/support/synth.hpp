#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oaisim/record.hpp"

namespace oaisim::fixtures {

/// Distinct lowercase words of 3-9 letters, none of them default stopwords.
std::vector<std::string> make_vocabulary(std::size_t size, std::mt19937_64& rng);

struct SyntheticDoc {
    MetadataRecord record;
    /// The terms the text pipeline should extract, as counted by the generator.
    std::map<std::string, std::uint32_t> counts;
};

std::string synthetic_identifier(std::size_t i);

/// A record whose title/description/subject/creator carry `n_terms` vocabulary
/// words drawn with a skewed distribution, mixed case and punctuation between them.
SyntheticDoc synthetic_doc(std::string identifier, std::size_t n_terms, const std::vector<std::string>& vocab,
                           std::mt19937_64& rng);

/// Copy of `doc` with every term count multiplied by `factor` (same fields, repeated text).
SyntheticDoc scaled_doc(const SyntheticDoc& doc, std::uint32_t factor);

/// Arbitrary valid record for serialization round trips: any DC element,
/// markup-hostile and non-ASCII text, sets, provenance, deletions.
MetadataRecord random_record(std::mt19937_64& rng, std::size_t index);

std::string random_datestamp(std::mt19937_64& rng);

}  // namespace oaisim::fixtures
