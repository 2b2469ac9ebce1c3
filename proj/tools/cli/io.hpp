#ifndef GBH_CLI_IO_HPP
#define GBH_CLI_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbh/classification.hpp"
#include "gbh/validate.hpp"

namespace gbh::cli {

/// Bad input file or argument; maps to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One value per line, or "index,value" CSV rows in any order covering
/// 0..N-1 exactly once. Blank lines and '#' comments are skipped, as is a
/// non-numeric first line (a header). Values must lie in [0, 1].
std::vector<double> read_pvalues(const std::filesystem::path& file);

/// Same layouts as read_pvalues with values 0 (null) or 1 (signal).
TruthAssignment read_truth(const std::filesystem::path& file);

void write_pvalues(const std::vector<double>& p, const std::filesystem::path& file);
void write_truth(const TruthAssignment& truth, const std::filesystem::path& file);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

/// One JSON object per line.
void write_report_jsonl(const std::vector<IdentityReport>& reports, std::ostream& os);

}  // namespace gbh::cli

#endif  // GBH_CLI_IO_HPP
