#include "gbh/classification.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gbh {

namespace {

void normalize(GroupNode& node, const GroupPath& path) {
  node.path = path;
  std::sort(node.members.begin(), node.members.end());
  node.members.erase(std::unique(node.members.begin(), node.members.end()), node.members.end());
  for (std::size_t k = 0; k < node.children.size(); ++k) {
    GroupPath child_path = path;
    child_path.push_back(k + 1);
    normalize(node.children[k], child_path);
  }
}

std::vector<HypothesisIndex> sorted_union(const std::vector<GroupNode>& nodes) {
  std::vector<HypothesisIndex> out;
  for (const auto& node : nodes) {
    std::vector<HypothesisIndex> merged;
    merged.reserve(out.size() + node.members.size());
    std::set_union(out.begin(), out.end(), node.members.begin(), node.members.end(),
                   std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

}  // namespace

std::string format_path(const GroupPath& path) {
  if (path.empty()) {
    return "root";
  }
  std::ostringstream os;
  for (std::size_t k = 0; k < path.size(); ++k) {
    os << (k == 0 ? "" : ".") << path[k];
  }
  return os.str();
}

std::vector<HypothesisIndex> index_range(HypothesisIndex first, HypothesisIndex last) {
  std::vector<HypothesisIndex> out(last > first ? last - first : 0);
  std::iota(out.begin(), out.end(), first);
  return out;
}

HierTree::HierTree(GroupNode root) : root_(std::move(root)) {
  normalize(root_, {});
  n_ = root_.members.size();
  index_node(root_, npos, 0);

  std::vector<std::size_t> counts(n_ + 1, 0);
  for (std::size_t leaf : leaves_) {
    for (HypothesisIndex i : members(leaf)) {
      if (i < n_) {
        ++counts[i + 1];
      }
    }
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  leaf_offsets_ = counts;
  leaf_ids_.resize(leaf_offsets_.back());
  std::vector<std::size_t> cursor(leaf_offsets_.begin(), leaf_offsets_.end() - 1);
  for (std::size_t leaf : leaves_) {
    for (HypothesisIndex i : members(leaf)) {
      if (i < n_) {
        leaf_ids_[cursor[i]++] = leaf;
      }
    }
  }
}

void HierTree::index_node(const GroupNode& node, std::size_t parent, std::size_t depth) {
  const std::size_t id = nodes_.size();
  Node flat;
  flat.parent = parent;
  flat.depth = depth;
  flat.member_offset = member_pool_.size();
  flat.member_count = node.members.size();
  member_pool_.insert(member_pool_.end(), node.members.begin(), node.members.end());
  nodes_.push_back(std::move(flat));
  paths_.push_back(node.path);
  if (parent != npos) {
    nodes_[parent].children.push_back(id);
  }
  depth_ = std::max(depth_, depth);
  if (node.children.empty()) {
    leaves_.push_back(id);
  }
  for (const auto& child : node.children) {
    index_node(child, id, depth + 1);
  }
}

HierTree HierTree::flat(std::size_t n) {
  GroupNode root;
  root.members = index_range(0, n);
  return HierTree(std::move(root));
}

HierTree HierTree::one_level(const std::vector<std::vector<HypothesisIndex>>& groups) {
  GroupNode root;
  for (const auto& g : groups) {
    GroupNode child;
    child.members = g;
    std::sort(child.members.begin(), child.members.end());
    root.children.push_back(std::move(child));
  }
  root.members = sorted_union(root.children);
  return HierTree(std::move(root));
}

std::span<const HypothesisIndex> HierTree::members(std::size_t node) const {
  const Node& n = nodes_.at(node);
  return {member_pool_.data() + n.member_offset, n.member_count};
}

std::span<const std::size_t> HierTree::leaves_containing(HypothesisIndex i) const {
  if (i >= n_) {
    return {};
  }
  return {leaf_ids_.data() + leaf_offsets_[i], leaf_offsets_[i + 1] - leaf_offsets_[i]};
}

std::size_t TruthAssignment::null_count() const noexcept {
  return static_cast<std::size_t>(std::count(is_null.begin(), is_null.end(), true));
}

double TruthAssignment::pi0() const noexcept {
  return is_null.empty() ? 0.0
                         : static_cast<double>(null_count()) / static_cast<double>(is_null.size());
}

GroupStats group_stats(std::span<const HypothesisIndex> members, const TruthAssignment& truth) {
  GroupStats stats;
  stats.n = members.size();
  for (HypothesisIndex i : members) {
    if (truth.is_null.at(i)) {
      ++stats.n0;
    }
  }
  stats.pi0 = stats.n == 0 ? 0.0 : static_cast<double>(stats.n0) / static_cast<double>(stats.n);
  return stats;
}

GroupStats group_stats(const GroupNode& node, const TruthAssignment& truth) {
  return group_stats(std::span<const HypothesisIndex>(node.members), truth);
}

const char* to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::empty_universe: return "empty universe";
    case ViolationKind::index_out_of_range: return "index out of range";
    case ViolationKind::empty_group: return "empty group";
    case ViolationKind::child_not_subset: return "child not a subset of its parent";
    case ViolationKind::siblings_not_covering: return "children do not cover their parent";
    case ViolationKind::root_not_universe: return "root does not hold every hypothesis";
    case ViolationKind::uneven_depth: return "leaves at different depths";
  }
  return "unknown";
}

std::string ValidationReport::summary() const {
  if (ok()) {
    return "ok";
  }
  std::ostringstream os;
  for (const auto& v : violations) {
    os << "tree " << v.tree << " group " << format_path(v.path) << ": " << to_string(v.kind);
    if (!v.message.empty()) {
      os << " (" << v.message << ")";
    }
    os << '\n';
  }
  return os.str();
}

namespace {

void check_node(const GroupNode& node, std::size_t tree, std::size_t n, std::size_t depth,
                std::size_t tree_depth, std::vector<Violation>& out) {
  auto report = [&](ViolationKind kind, std::string message = {}) {
    out.push_back(Violation{tree, node.path, kind, std::move(message)});
  };

  if (node.members.empty()) {
    report(ViolationKind::empty_group);
  }
  if (!node.members.empty() && node.members.back() >= n) {
    report(ViolationKind::index_out_of_range,
           "index " + std::to_string(node.members.back()) + " with N=" + std::to_string(n));
  }
  if (node.children.empty()) {
    if (depth != tree_depth) {
      report(ViolationKind::uneven_depth,
             "leaf at depth " + std::to_string(depth) + ", tree depth " +
                 std::to_string(tree_depth));
    }
    return;
  }
  for (const auto& child : node.children) {
    if (!std::includes(node.members.begin(), node.members.end(), child.members.begin(),
                       child.members.end())) {
      out.push_back(Violation{tree, child.path, ViolationKind::child_not_subset, {}});
    }
  }
  const auto covered = sorted_union(node.children);
  if (!std::includes(covered.begin(), covered.end(), node.members.begin(), node.members.end())) {
    report(ViolationKind::siblings_not_covering);
  }
  for (const auto& child : node.children) {
    check_node(child, tree, n, depth + 1, tree_depth, out);
  }
}

}  // namespace

ValidationReport validate_forest(const ClassificationForest& forest) {
  ValidationReport report;
  if (forest.n == 0) {
    report.violations.push_back(Violation{0, {}, ViolationKind::empty_universe, "N must be >= 1"});
  }
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const HierTree& tree = forest.trees[t];
    const auto& root = tree.root();
    const bool is_universe = root.members.size() == forest.n &&
                             (forest.n == 0 || (root.members.front() == 0 &&
                                                root.members.back() == forest.n - 1));
    if (!is_universe) {
      report.violations.push_back(Violation{t, {}, ViolationKind::root_not_universe,
                                            "root has " + std::to_string(root.members.size()) +
                                                " members, N=" + std::to_string(forest.n)});
    }
    check_node(root, t, forest.n, 0, tree.depth(), report.violations);
  }
  return report;
}

std::vector<std::vector<GroupPath>> leaf_memberships(const ClassificationForest& forest,
                                                     HypothesisIndex i) {
  if (i >= forest.n) {
    throw std::out_of_range("hypothesis index " + std::to_string(i) + " out of range for N=" +
                            std::to_string(forest.n));
  }
  std::vector<std::vector<GroupPath>> out;
  out.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) {
    std::vector<GroupPath> paths;
    for (std::size_t leaf : tree.leaves_containing(i)) {
      paths.push_back(tree.path(leaf));
    }
    out.push_back(std::move(paths));
  }
  return out;
}

}  // namespace gbh
