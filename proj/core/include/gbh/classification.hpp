#ifndef GBH_CLASSIFICATION_HPP
#define GBH_CLASSIFICATION_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gbh {

using HypothesisIndex = std::size_t;

/// Positional group labels from the root, 1-based within each parent.
/// The root has an empty path.
using GroupPath = std::vector<std::size_t>;

std::string format_path(const GroupPath& path);

/// A group of hypotheses and its subgroups at the next level.
///
/// Children must be subsets of the parent and jointly cover it. Sibling
/// groups may share members; that is how overlap is expressed.
struct GroupNode {
  GroupPath path;
  std::vector<HypothesisIndex> members;  // sorted, unique
  std::vector<GroupNode> children;
};

/// Builds the member list [first, last).
std::vector<HypothesisIndex> index_range(HypothesisIndex first, HypothesisIndex last);

/// A hierarchical classification over the hypotheses of its root.
///
/// Immutable after construction. Alongside the node tree it keeps a flat
/// preorder view of the nodes and, for every hypothesis, the leaves that
/// contain it; weight computations run on that view.
class HierTree {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Node {
    std::size_t parent = npos;
    std::size_t depth = 0;
    std::vector<std::size_t> children;
    std::size_t member_offset = 0;
    std::size_t member_count = 0;
  };

  /// Normalizes member lists (sort, dedupe) and assigns positional paths.
  explicit HierTree(GroupNode root);

  /// Depth-0 tree: the unclassified set {0, ..., n-1}.
  static HierTree flat(std::size_t n);

  /// Depth-1 tree whose level-1 groups are `groups` (in order). The root is
  /// the union of the groups.
  static HierTree one_level(const std::vector<std::vector<HypothesisIndex>>& groups);

  [[nodiscard]] const GroupNode& root() const noexcept { return root_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t depth() const noexcept { return depth_; }

  [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const HypothesisIndex> members(std::size_t node) const;
  [[nodiscard]] const GroupPath& path(std::size_t node) const { return paths_[node]; }

  /// Node ids of childless nodes, in preorder.
  [[nodiscard]] std::span<const std::size_t> leaves() const noexcept { return leaves_; }

  /// Leaf node ids whose members contain hypothesis i (empty if i >= size()).
  [[nodiscard]] std::span<const std::size_t> leaves_containing(HypothesisIndex i) const;

 private:
  void index_node(const GroupNode& node, std::size_t parent, std::size_t depth);

  GroupNode root_;
  std::size_t n_ = 0;
  std::size_t depth_ = 0;
  std::vector<Node> nodes_;
  std::vector<GroupPath> paths_;
  std::vector<HypothesisIndex> member_pool_;
  std::vector<std::size_t> leaves_;
  std::vector<std::size_t> leaf_offsets_;
  std::vector<std::size_t> leaf_ids_;
};

/// S simultaneous hierarchical classifications of the same N hypotheses.
struct ClassificationForest {
  std::size_t n = 0;
  std::vector<HierTree> trees;

  [[nodiscard]] std::size_t s_count() const noexcept { return trees.size(); }
};

/// Oracle null / non-null labels.
struct TruthAssignment {
  std::vector<bool> is_null;

  [[nodiscard]] std::size_t size() const noexcept { return is_null.size(); }
  [[nodiscard]] std::size_t null_count() const noexcept;
  [[nodiscard]] double pi0() const noexcept;
};

struct GroupStats {
  std::size_t n = 0;
  std::size_t n0 = 0;
  double pi0 = 0.0;
};

GroupStats group_stats(std::span<const HypothesisIndex> members, const TruthAssignment& truth);
GroupStats group_stats(const GroupNode& node, const TruthAssignment& truth);

enum class ViolationKind {
  empty_universe,
  index_out_of_range,
  empty_group,
  child_not_subset,
  siblings_not_covering,
  root_not_universe,
  uneven_depth,
};

struct Violation {
  std::size_t tree = 0;
  GroupPath path;
  ViolationKind kind{};
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  [[nodiscard]] std::string summary() const;
};

const char* to_string(ViolationKind kind) noexcept;

/// Checks every structural invariant of every tree. Violations are
/// reported, never thrown.
ValidationReport validate_forest(const ClassificationForest& forest);

/// For each tree, the paths of the leaves containing hypothesis i.
/// Throws std::out_of_range if i >= forest.n.
std::vector<std::vector<GroupPath>> leaf_memberships(const ClassificationForest& forest,
                                                     HypothesisIndex i);

}  // namespace gbh

#endif  // GBH_CLASSIFICATION_HPP
