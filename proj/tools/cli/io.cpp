#include "io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

namespace gbh::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::size_t> to_index(const std::string& s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return v;
}

// Reads either layout; `check` validates a value and returns an error text
// or an empty string.
template <typename Check>
std::vector<double> read_column(const std::filesystem::path& file, const char* what, Check check) {
  std::ifstream in(file);
  if (!in) {
    throw InputError("cannot open " + std::string(what) + " file " + file.string());
  }
  std::vector<std::pair<std::size_t, double>> rows;
  std::optional<bool> indexed;
  std::string line;
  std::size_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const std::string where = file.string() + ":" + std::to_string(line_no);
    const auto comma = line.find(',');
    const bool has_index = comma != std::string::npos;
    std::optional<std::size_t> index;
    std::optional<double> value;
    if (has_index) {
      index = to_index(trim(line.substr(0, comma)));
      value = to_double(trim(line.substr(comma + 1)));
    } else {
      value = to_double(line);
    }
    if (first_data_line && (!value || (has_index && !index))) {
      first_data_line = false;  // header
      continue;
    }
    first_data_line = false;
    if (indexed && *indexed != has_index) {
      throw InputError(where + ": mixes indexed and plain rows");
    }
    indexed = has_index;
    if (!value || (has_index && !index)) {
      throw InputError(where + ": cannot parse '" + line + "'");
    }
    if (const std::string err = check(*value); !err.empty()) {
      throw InputError(where + ": " + err);
    }
    rows.emplace_back(has_index ? *index : rows.size(), *value);
  }
  if (rows.empty()) {
    throw InputError(std::string(what) + " file " + file.string() + " has no values");
  }
  std::vector<double> out(rows.size(), std::nan(""));
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [i, v] : rows) {
    if (i >= rows.size()) {
      throw InputError(file.string() + ": index " + std::to_string(i) + " out of range for " +
                       std::to_string(rows.size()) + " rows");
    }
    if (seen[i]) {
      throw InputError(file.string() + ": index " + std::to_string(i) + " appears twice");
    }
    seen[i] = true;
    out[i] = v;
  }
  return out;
}

}  // namespace

std::vector<double> read_pvalues(const std::filesystem::path& file) {
  return read_column(file, "p-value", [](double v) -> std::string {
    if (!(v >= 0.0 && v <= 1.0)) {
      return "p-value " + format_double(v) + " outside [0, 1]";
    }
    return {};
  });
}

TruthAssignment read_truth(const std::filesystem::path& file) {
  const auto values = read_column(file, "truth", [](double v) -> std::string {
    if (v != 0.0 && v != 1.0) {
      return "truth labels must be 0 (null) or 1 (signal)";
    }
    return {};
  });
  TruthAssignment t;
  t.is_null.reserve(values.size());
  for (double v : values) {
    t.is_null.push_back(v == 0.0);
  }
  return t;
}

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_pvalues(const std::vector<double>& p, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw InputError("cannot write " + file.string());
  }
  for (double x : p) {
    out << format_double(x) << '\n';
  }
}

void write_truth(const TruthAssignment& truth, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw InputError("cannot write " + file.string());
  }
  for (bool null : truth.is_null) {
    out << (null ? 0 : 1) << '\n';
  }
}

void write_report_jsonl(const std::vector<IdentityReport>& reports, std::ostream& os) {
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["identity"] = r.identity;
    j["trial"] = r.trial;
    j["computed"] = std::isfinite(r.computed) ? nlohmann::ordered_json(r.computed)
                                              : nlohmann::ordered_json(format_double(r.computed));
    j["target"] = r.target;
    j["tolerance"] = r.tolerance;
    j["relation"] = r.relation == Relation::equal ? "equal" : "at_most";
    j["pass"] = r.pass;
    j["digest"] = r.digest;
    j["seed"] = r.seed;
    os << j.dump() << '\n';
  }
}

}  // namespace gbh::cli
