#ifndef GBH_CLASSIFICATION_IO_HPP
#define GBH_CLASSIFICATION_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gbh/classification.hpp"

namespace gbh {

/// Raised for malformed or structurally invalid classification files.
class ClassificationFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON layout:
///
///   { "n": 6,
///     "trees": [ { "levels": [ [ {"path": [1], "members": [[0, 4]]},
///                                {"path": [2], "members": [3, 4, 5]} ] ] } ] }
///
/// `levels[k]` lists the groups at depth k + 1 by 1-based path; the root is
/// implicit and holds 0..n-1. A member entry is an index or a half-open
/// range [first, last). A tree with no levels is the unclassified set.
/// The forest is validated after parsing; any violation is an error.
ClassificationForest parse_forest_json(const std::string& text);
ClassificationForest read_forest_json(const std::filesystem::path& file);

/// Inverse of parse_forest_json; consecutive runs of three or more indices
/// are written as ranges.
std::string forest_to_json(const ClassificationForest& forest, int indent = 2);
void write_forest_json(const ClassificationForest& forest, const std::filesystem::path& file);

}  // namespace gbh

#endif  // GBH_CLASSIFICATION_IO_HPP
