#include "gbh/classification_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gbh {

namespace {

using nlohmann::json;

std::vector<HypothesisIndex> parse_members(const json& entries, std::size_t n,
                                           const std::string& where) {
  if (!entries.is_array()) {
    throw ClassificationFormatError(where + ": \"members\" must be an array");
  }
  std::vector<HypothesisIndex> out;
  for (const json& e : entries) {
    if (e.is_number_unsigned()) {
      out.push_back(e.get<HypothesisIndex>());
    } else if (e.is_array() && e.size() == 2 && e[0].is_number_unsigned() &&
               e[1].is_number_unsigned()) {
      const auto first = e[0].get<HypothesisIndex>();
      const auto last = e[1].get<HypothesisIndex>();
      if (first >= last) {
        throw ClassificationFormatError(where + ": empty range [" + std::to_string(first) + ", " +
                                        std::to_string(last) + ")");
      }
      for (HypothesisIndex i = first; i < last; ++i) {
        out.push_back(i);
      }
    } else {
      throw ClassificationFormatError(where + ": member entries must be indices or [first, last)");
    }
  }
  for (const HypothesisIndex i : out) {
    if (i >= n) {
      throw ClassificationFormatError(where + ": index " + std::to_string(i) +
                                      " out of range for n = " + std::to_string(n));
    }
  }
  return out;
}

GroupNode build_node(std::map<GroupPath, std::vector<HypothesisIndex>>& groups, GroupPath path,
                     std::vector<HypothesisIndex> members) {
  GroupNode node;
  node.path = path;
  node.members = std::move(members);
  for (std::size_t k = 1;; ++k) {
    GroupPath child = path;
    child.push_back(k);
    auto it = groups.find(child);
    if (it == groups.end()) {
      break;
    }
    node.children.push_back(build_node(groups, child, std::move(it->second)));
    groups.erase(it);
  }
  return node;
}

HierTree parse_tree(const json& tree, std::size_t n, std::size_t t) {
  const std::string where = "tree " + std::to_string(t);
  if (!tree.is_object()) {
    throw ClassificationFormatError(where + ": must be an object");
  }
  std::map<GroupPath, std::vector<HypothesisIndex>> groups;
  const json levels = tree.value("levels", json::array());
  if (!levels.is_array()) {
    throw ClassificationFormatError(where + ": \"levels\" must be an array");
  }
  for (std::size_t d = 0; d < levels.size(); ++d) {
    if (!levels[d].is_array()) {
      throw ClassificationFormatError(where + ": level " + std::to_string(d + 1) +
                                      " must be an array");
    }
    for (const json& g : levels[d]) {
      if (!g.is_object() || !g.contains("path") || !g.contains("members")) {
        throw ClassificationFormatError(where + ": groups need \"path\" and \"members\"");
      }
      GroupPath path;
      for (const json& k : g["path"]) {
        if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) {
          throw ClassificationFormatError(where + ": path labels are positive integers");
        }
        path.push_back(k.get<std::size_t>());
      }
      const std::string gw = where + ", group " + format_path(path);
      if (path.size() != d + 1) {
        throw ClassificationFormatError(gw + ": path length does not match level " +
                                        std::to_string(d + 1));
      }
      if (!groups.emplace(path, parse_members(g["members"], n, gw)).second) {
        throw ClassificationFormatError(gw + ": duplicate path");
      }
    }
  }
  GroupNode root = build_node(groups, {}, index_range(0, n));
  if (!groups.empty()) {
    throw ClassificationFormatError(where + ", group " + format_path(groups.begin()->first) +
                                    ": no parent or preceding sibling");
  }
  return HierTree(std::move(root));
}

json members_to_json(std::span<const HypothesisIndex> members) {
  json out = json::array();
  std::size_t j = 0;
  while (j < members.size()) {
    std::size_t k = j + 1;
    while (k < members.size() && members[k] == members[k - 1] + 1) {
      ++k;
    }
    if (k - j >= 3) {
      out.push_back(json::array({members[j], members[k - 1] + 1}));
    } else {
      for (std::size_t m = j; m < k; ++m) {
        out.push_back(members[m]);
      }
    }
    j = k;
  }
  return out;
}

}  // namespace

ClassificationForest parse_forest_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ClassificationFormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_unsigned()) {
    throw ClassificationFormatError("top level needs a non-negative integer \"n\"");
  }
  if (!doc.contains("trees") || !doc["trees"].is_array() || doc["trees"].empty()) {
    throw ClassificationFormatError("top level needs a non-empty array \"trees\"");
  }
  ClassificationForest forest;
  forest.n = doc["n"].get<std::size_t>();
  for (std::size_t t = 0; t < doc["trees"].size(); ++t) {
    forest.trees.push_back(parse_tree(doc["trees"][t], forest.n, t));
  }
  const ValidationReport report = validate_forest(forest);
  if (!report.ok()) {
    throw ClassificationFormatError(report.summary());
  }
  return forest;
}

ClassificationForest read_forest_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ClassificationFormatError("cannot open " + file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_forest_json(ss.str());
}

std::string forest_to_json(const ClassificationForest& forest, int indent) {
  json doc;
  doc["n"] = forest.n;
  doc["trees"] = json::array();
  for (const HierTree& tree : forest.trees) {
    json levels = json::array();
    for (std::size_t d = 0; d < tree.depth(); ++d) {
      levels.push_back(json::array());
    }
    for (std::size_t node = 0; node < tree.nodes().size(); ++node) {
      const std::size_t depth = tree.nodes()[node].depth;
      if (depth == 0) {
        continue;
      }
      levels[depth - 1].push_back(
          json{{"path", tree.path(node)}, {"members", members_to_json(tree.members(node))}});
    }
    doc["trees"].push_back(json{{"levels", std::move(levels)}});
  }
  return doc.dump(indent) + "\n";
}

void write_forest_json(const ClassificationForest& forest, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw ClassificationFormatError("cannot write " + file.string());
  }
  out << forest_to_json(forest);
}

}  // namespace gbh
