#ifndef GBH_VALIDATE_HPP
#define GBH_VALIDATE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gbh/classification.hpp"
#include "gbh/numeric.hpp"
#include "gbh/weights.hpp"

namespace gbh {

enum class Relation {
  equal,    // pass iff |computed - target| <= tolerance
  at_most,  // pass iff computed <= target + tolerance
};

struct IdentityReport {
  std::string identity;
  double computed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::equal;
  bool pass = false;
  std::string digest;  // configuration digest, filled by the sweep
  std::uint64_t seed = 0;
  std::size_t trial = 0;
};

IdentityReport make_report(std::string identity, double computed, double target, double tolerance,
                           Relation relation = Relation::equal);

/// sum over true nulls of 1/W_i (compensated; +inf weights add 0).
double null_inverse_weight_sum(const WeightVector& weights, const TruthAssignment& truth);

/// sum_{i null} 1/W_i against N at tolerance 1e-9 * N.
IdentityReport check_condition1(const WeightVector& weights, const TruthAssignment& truth);

using WeightFn = std::function<WeightVector(std::span<const double>)>;

/// sum_{i null} 1/W_i(P with P_i set to 0), each term from a fresh weight
/// computation.
double loo_inverse_weight_sum(const WeightFn& weights, std::span<const double> pvalues,
                              const TruthAssignment& truth);

/// The leave-one-out sum against the bound N.
IdentityReport check_loo_bound(const WeightFn& weights, std::span<const double> pvalues,
                               const TruthAssignment& truth);

/// Closed form of the leave-one-out sum for data-adaptive weights on a
/// depth-1 partition with m groups:
///   N (1 - lambda) / m * sum_g [ (n0_g - V_g) / (n_g - R_g) + V_g / (n_g - R_g + 1) ]
/// where R_g counts p-values <= lambda in group g and V_g the nulls among them.
double loo_closed_form_oneway(const HierTree& partition, std::span<const double> pvalues,
                              const TruthAssignment& truth, double lambda);

/// Closed form and literal recomputation agree to 1e-12 relative.
IdentityReport check_loo_routes(const HierTree& partition, std::span<const double> pvalues,
                                const TruthAssignment& truth, double lambda);

/// Applies `trials` random upward moves to single p-values (each from the
/// unperturbed vector) and counts the moves that lowered any weight by more
/// than 1e-12 relative.
IdentityReport check_monotone(const WeightFn& weights, std::span<const double> pvalues,
                              std::size_t trials, Rng& rng);

/// Largest relative difference between two weight vectors; matching
/// infinities count as equal.
double max_relative_difference(const WeightVector& a, const WeightVector& b);

IdentityReport check_depth0_reduction(const TruthAssignment& truth);
/// `partition` must be a depth-1 partition: weights equal
/// (1 - pi0) pi0_g / (1 - pi0_g) in each group.
IdentityReport check_oneway_reduction(const HierTree& partition, const TruthAssignment& truth);
IdentityReport check_single_tree_reduction(const HierTree& tree, const TruthAssignment& truth);
IdentityReport check_recursion_equivalence(const HierTree& tree, const TruthAssignment& truth);
IdentityReport check_sway_generalized_agreement(const ClassificationForest& partitions,
                                                const TruthAssignment& truth);

/// All reductions that apply to `tree`.
std::vector<IdentityReport> check_reductions(const HierTree& tree, const TruthAssignment& truth);

/// Number of hypotheses on which weighted_bh disagrees with the quadratic
/// evaluation of max{ j : #{i : W_i P_i <= j alpha / N} >= j }.
IdentityReport check_step_up(std::span<const double> pvalues, const WeightVector& weights,
                             double alpha);

// Random configurations -------------------------------------------------------

enum class ConfigShape { flat, oneway_overlap, hierarchical, sway, generalized };

const char* to_string(ConfigShape shape) noexcept;

struct GeneratorBounds {
  std::size_t min_n = 10;
  std::size_t max_n = 500;
  std::size_t max_depth = 3;
  std::size_t max_trees = 3;
  double max_overlap = 0.3;
  double pi0_margin = 0.05;
  /// Require 0 < pi0 < 1 in every group of every tree.
  bool non_degenerate = true;
};

struct TrialConfig {
  ConfigShape shape = ConfigShape::flat;
  std::uint64_t seed = 0;
  ClassificationForest forest;
  TruthAssignment truth;
  std::vector<double> pvalues;       // i.i.d. Uniform(0, 1)
  std::vector<double> group_effects;  // oneway_overlap only, one per level-1 group
};

/// Deterministic in (shape, seed, bounds).
TrialConfig make_trial_config(ConfigShape shape, std::uint64_t seed,
                              const GeneratorBounds& bounds = {});

/// 16 hex digits identifying the structure, truth and p-values.
std::string config_digest(const TrialConfig& config);

// Sweep -----------------------------------------------------------------------

struct SweepOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  GeneratorBounds bounds;
  std::size_t monotone_moves = 20;
  double lambda = 0.5;
  double alpha = 0.05;
  /// Negative control: perturbs one oracle weight before the null-sum
  /// checks so they must fail.
  bool corrupt = false;
};

/// Identity names in the order each trial reports them.
std::vector<std::string> sweep_identities();

/// One report per identity per trial.
std::vector<IdentityReport> run_validation_sweep(const SweepOptions& options);

}  // namespace gbh

#endif  // GBH_VALIDATE_HPP
