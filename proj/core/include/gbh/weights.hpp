#ifndef GBH_WEIGHTS_HPP
#define GBH_WEIGHTS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "gbh/classification.hpp"

namespace gbh {

/// Multiplicative p-value weights, one per hypothesis.
///
/// Entries live in [0, +inf]. +inf marks a hypothesis that can never be
/// rejected (it sits only in all-null groups); 0 marks one that is always
/// rejected (it sits in an all-signal group). Both only arise from
/// degenerate oracle proportions.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> values) : values_(std::move(values)) {}
  WeightVector(std::size_t n, double value) : values_(n, value) {}

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::vector<double>& mutable_values() noexcept { return values_; }

  [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
  [[nodiscard]] auto end() const noexcept { return values_.end(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> values_;
};

/// Which closed form drives the oracle group-effect recursion.
enum class Recursion {
  /// w(node) = pi0 (1 - pi0) / w(parent) * odds(node)
  forward,
  /// w(node) = w(grandparent) / odds(parent) * odds(node)
  alternating,
};

/// How null counts of internal groups are estimated in the data-adaptive
/// weights.
enum class AncestorEstimate {
  /// Every group gets its own Storey estimate from its own p-values.
  direct,
  /// Parent estimate = (number of siblings) * child estimate, applied
  /// along each leaf's own lineage.
  multiplicative,
};

/// Storey-type null count (n - R(lambda) + 1) / (1 - lambda) for one group.
struct NullCountEstimate {
  double lambda = 0.5;
  std::size_t n = 0;
  std::size_t r_lambda = 0;  // p-values <= lambda
  double n_hat0 = 0.0;
};

/// Throws std::invalid_argument unless 0 < lambda < 1.
void require_lambda(double lambda);

NullCountEstimate storey_null_estimate(std::span<const double> pvalues, double lambda);

/// Same estimate over the subset `members` of `pvalues`.
NullCountEstimate storey_null_estimate(std::span<const double> pvalues,
                                       std::span<const HypothesisIndex> members, double lambda);

/// 1/W = (1/S) sum_s 1/W(s), with 1/0 = inf and 1/inf = 0.
WeightVector harmonic_combine(std::span<const WeightVector> parts);

/// Assembles per-hypothesis weights from leaf effects w_leaf and leaf null
/// counts n0_leaf:
///
///   1/W_i = (sum_leaf n0_leaf / w_leaf / N)^-1 * sum_{leaf containing i} 1/w_leaf
///
/// Both spans are indexed by node id of `tree`; only leaf entries are read.
/// With exact null counts the result satisfies sum_{i null} 1/W_i = N for
/// any positive leaf effects.
WeightVector assemble_weights(const HierTree& tree, std::span<const double> leaf_effect,
                              std::span<const double> leaf_null_count);

// Oracle weights ------------------------------------------------------------

/// W_i = pi0 for every hypothesis.
WeightVector oracle_flat_weights(const TruthAssignment& truth);

/// Overlapping one-way groups with caller-chosen group effects w_g > 0.
/// Throws std::invalid_argument if a hypothesis is in no group, a group is
/// empty, or an effect is not finite and positive.
WeightVector oracle_overlap_oneway_weights(
    const std::vector<std::vector<HypothesisIndex>>& groups, std::span<const double> group_effects,
    const TruthAssignment& truth);

/// Oracle group effect of every node of `tree` (indexed by node id). Groups
/// with no true nulls get 0 and groups of only true nulls get +inf.
std::vector<double> oracle_group_effects(const HierTree& tree, const TruthAssignment& truth,
                                         Recursion recursion = Recursion::forward);

/// Hierarchically grouped oracle weights. A global null proportion of 0 or
/// 1 yields the constant weight pi0.
WeightVector oracle_hier_weights(const HierTree& tree, const TruthAssignment& truth,
                                 Recursion recursion = Recursion::forward);

/// S-way oracle weights: every tree must be a depth-1 partition.
WeightVector oracle_sway_weights(const ClassificationForest& forest, const TruthAssignment& truth);

/// Generalized oracle weights: harmonic mean of per-tree hierarchical weights.
WeightVector oracle_gen_weights(const ClassificationForest& forest, const TruthAssignment& truth);

// Data-adaptive weights -----------------------------------------------------

/// (N - R_N(lambda) + 1) / (N (1 - lambda)) for every hypothesis.
WeightVector adaptive_flat_weights(std::span<const double> pvalues, double lambda);

struct EstimatedEffects {
  std::vector<double> n_hat0;  // per node
  std::vector<double> effect;  // per node; NaN where undefined
};

/// Estimated null counts and group effects of every node.
///
/// With AncestorEstimate::multiplicative, internal-node quantities depend on
/// the leaf lineage they are viewed from; only leaf entries (and the root
/// effect) are filled and the rest are NaN.
EstimatedEffects estimated_group_effects(const HierTree& tree, std::span<const double> pvalues,
                                         double lambda,
                                         AncestorEstimate ancestors = AncestorEstimate::direct);

WeightVector da_hier_weights(const HierTree& tree, std::span<const double> pvalues, double lambda,
                             AncestorEstimate ancestors = AncestorEstimate::direct);

/// Data-adaptive S-way weights: every tree must be a depth-1 partition.
WeightVector da_sway_weights(const ClassificationForest& forest, std::span<const double> pvalues,
                             double lambda);

WeightVector da_gen_weights(const ClassificationForest& forest, std::span<const double> pvalues,
                            double lambda,
                            AncestorEstimate ancestors = AncestorEstimate::direct);

/// True when every tree of `forest` is depth 1 and its groups are disjoint.
bool is_sway_partition(const ClassificationForest& forest);

}  // namespace gbh

#endif  // GBH_WEIGHTS_HPP
