#include "gbh/validate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gbh/testing.hpp"

namespace gbh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_partition(const HierTree& tree) {
  if (tree.depth() != 1) {
    return false;
  }
  std::size_t total = 0;
  for (const std::size_t leaf : tree.leaves()) {
    total += tree.members(leaf).size();
  }
  return total == tree.size();
}

}  // namespace

IdentityReport make_report(std::string identity, double computed, double target, double tolerance,
                           Relation relation) {
  IdentityReport r;
  r.identity = std::move(identity);
  r.computed = computed;
  r.target = target;
  r.tolerance = tolerance;
  r.relation = relation;
  if (relation == Relation::equal) {
    r.pass = std::abs(computed - target) <= tolerance ||
             (std::isinf(computed) && computed == target);
  } else {
    r.pass = computed <= target + tolerance;
  }
  return r;
}

double null_inverse_weight_sum(const WeightVector& weights, const TruthAssignment& truth) {
  if (weights.size() != truth.size()) {
    throw std::invalid_argument("null_inverse_weight_sum: size mismatch");
  }
  CompensatedSum sum;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (truth.is_null[i] && !std::isinf(weights[i])) {
      sum += 1.0 / weights[i];
    }
  }
  return sum.value();
}

IdentityReport check_condition1(const WeightVector& weights, const TruthAssignment& truth) {
  const auto n = static_cast<double>(truth.size());
  return make_report("condition1", null_inverse_weight_sum(weights, truth), n, 1e-9 * n);
}

double loo_inverse_weight_sum(const WeightFn& weights, std::span<const double> pvalues,
                              const TruthAssignment& truth) {
  if (pvalues.size() != truth.size()) {
    throw std::invalid_argument("loo_inverse_weight_sum: size mismatch");
  }
  std::vector<double> p(pvalues.begin(), pvalues.end());
  CompensatedSum sum;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!truth.is_null[i]) {
      continue;
    }
    const double saved = p[i];
    p[i] = 0.0;
    const WeightVector w = weights(p);
    p[i] = saved;
    if (!std::isinf(w[i])) {
      sum += 1.0 / w[i];
    }
  }
  return sum.value();
}

IdentityReport check_loo_bound(const WeightFn& weights, std::span<const double> pvalues,
                               const TruthAssignment& truth) {
  const auto n = static_cast<double>(truth.size());
  return make_report("loo_bound", loo_inverse_weight_sum(weights, pvalues, truth), n, 1e-9 * n,
                     Relation::at_most);
}

double loo_closed_form_oneway(const HierTree& partition, std::span<const double> pvalues,
                              const TruthAssignment& truth, double lambda) {
  require_lambda(lambda);
  if (!is_partition(partition)) {
    throw std::invalid_argument("loo_closed_form_oneway: tree is not a depth-1 partition");
  }
  const auto n = static_cast<double>(partition.size());
  const auto m = static_cast<double>(partition.leaves().size());
  CompensatedSum sum;
  for (const std::size_t leaf : partition.leaves()) {
    std::size_t size = 0, nulls = 0, r = 0, v = 0;
    for (const HypothesisIndex i : partition.members(leaf)) {
      ++size;
      const bool below = pvalues[i] <= lambda;
      r += below ? 1 : 0;
      if (truth.is_null[i]) {
        ++nulls;
        v += below ? 1 : 0;
      }
    }
    if (nulls > v) {
      sum += static_cast<double>(nulls - v) / static_cast<double>(size - r);
    }
    sum += static_cast<double>(v) / static_cast<double>(size - r + 1);
  }
  return n * (1.0 - lambda) / m * sum.value();
}

IdentityReport check_loo_routes(const HierTree& partition, std::span<const double> pvalues,
                                const TruthAssignment& truth, double lambda) {
  const double closed = loo_closed_form_oneway(partition, pvalues, truth, lambda);
  const double literal = loo_inverse_weight_sum(
      [&](std::span<const double> p) { return da_hier_weights(partition, p, lambda); }, pvalues,
      truth);
  return make_report("loo_routes", literal, closed, 1e-12 * std::max(1.0, std::abs(closed)));
}

IdentityReport check_monotone(const WeightFn& weights, std::span<const double> pvalues,
                              std::size_t trials, Rng& rng) {
  const WeightVector before = weights(pvalues);
  std::vector<double> p(pvalues.begin(), pvalues.end());
  std::uniform_int_distribution<std::size_t> pick(0, p.empty() ? 0 : p.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials && !p.empty(); ++t) {
    const std::size_t j = pick(rng);
    const double saved = p[j];
    p[j] = saved + unit(rng) * (1.0 - saved);
    const WeightVector after = weights(p);
    p[j] = saved;
    for (std::size_t k = 0; k < after.size(); ++k) {
      if (after[k] < before[k] * (1.0 - 1e-12)) {
        ++violations;
        break;
      }
    }
  }
  return make_report("monotone", static_cast<double>(violations), 0.0, 0.0);
}

double max_relative_difference(const WeightVector& a, const WeightVector& b) {
  if (a.size() != b.size()) {
    return kInf;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) {
      continue;
    }
    if (std::isinf(a[i]) || std::isinf(b[i]) || std::isnan(a[i]) || std::isnan(b[i])) {
      return kInf;
    }
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

IdentityReport check_depth0_reduction(const TruthAssignment& truth) {
  const double d = max_relative_difference(
      oracle_hier_weights(HierTree::flat(truth.size()), truth), oracle_flat_weights(truth));
  return make_report("reduction.depth0", d, 0.0, 1e-12);
}

IdentityReport check_oneway_reduction(const HierTree& partition, const TruthAssignment& truth) {
  if (!is_partition(partition)) {
    throw std::invalid_argument("check_oneway_reduction: tree is not a depth-1 partition");
  }
  const double pi0 = truth.pi0();
  std::vector<double> expected(truth.size(), pi0);
  if (pi0 > 0.0 && pi0 < 1.0) {
    for (const std::size_t leaf : partition.leaves()) {
      const double pg = group_stats(partition.members(leaf), truth).pi0;
      const double w = pg >= 1.0 ? kInf : (1.0 - pi0) * pg / (1.0 - pg);
      for (const HypothesisIndex i : partition.members(leaf)) {
        expected[i] = w;
      }
    }
  }
  const double d = max_relative_difference(oracle_hier_weights(partition, truth),
                                           WeightVector(std::move(expected)));
  return make_report("reduction.oneway", d, 0.0, 1e-12);
}

IdentityReport check_single_tree_reduction(const HierTree& tree, const TruthAssignment& truth) {
  ClassificationForest forest{tree.size(), {tree}};
  const double d =
      max_relative_difference(oracle_gen_weights(forest, truth), oracle_hier_weights(tree, truth));
  return make_report("reduction.single_tree", d, 0.0, 1e-12);
}

IdentityReport check_recursion_equivalence(const HierTree& tree, const TruthAssignment& truth) {
  const WeightVector forward(oracle_group_effects(tree, truth, Recursion::forward));
  const WeightVector alternating(oracle_group_effects(tree, truth, Recursion::alternating));
  return make_report("reduction.recursion", max_relative_difference(forward, alternating), 0.0,
                     1e-12);
}

IdentityReport check_sway_generalized_agreement(const ClassificationForest& partitions,
                                                const TruthAssignment& truth) {
  const double d = max_relative_difference(oracle_sway_weights(partitions, truth),
                                           oracle_gen_weights(partitions, truth));
  return make_report("reduction.sway_generalized", d, 0.0, 1e-12);
}

std::vector<IdentityReport> check_reductions(const HierTree& tree, const TruthAssignment& truth) {
  std::vector<IdentityReport> out;
  out.push_back(check_depth0_reduction(truth));
  if (is_partition(tree)) {
    out.push_back(check_oneway_reduction(tree, truth));
  }
  out.push_back(check_single_tree_reduction(tree, truth));
  out.push_back(check_recursion_equivalence(tree, truth));
  return out;
}

IdentityReport check_step_up(std::span<const double> pvalues, const WeightVector& weights,
                             double alpha) {
  const TestOutcome outcome = weighted_bh(pvalues, weights, alpha);
  const std::vector<double> wp = weighted_pvalues(pvalues, weights);
  const std::size_t n = wp.size();
  const auto cut = [&](std::size_t j) {
    return static_cast<double>(j) * alpha / static_cast<double>(n);
  };
  std::size_t k = 0;
  for (std::size_t j = n; j >= 1 && k == 0; --j) {
    const auto below = static_cast<std::size_t>(
        std::count_if(wp.begin(), wp.end(), [&](double x) { return x <= cut(j); }));
    if (below >= j) {
      k = j;
    }
  }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool expected = k > 0 && wp[i] <= cut(k);
    mismatches += expected != static_cast<bool>(outcome.rejected[i]) ? 1 : 0;
  }
  return make_report("stepup.brute_force", static_cast<double>(mismatches), 0.0, 0.0);
}

// Random configurations -------------------------------------------------------

const char* to_string(ConfigShape shape) noexcept {
  switch (shape) {
    case ConfigShape::flat: return "flat";
    case ConfigShape::oneway_overlap: return "oneway_overlap";
    case ConfigShape::hierarchical: return "hierarchical";
    case ConfigShape::sway: return "sway";
    case ConfigShape::generalized: return "generalized";
  }
  return "unknown";
}

namespace {

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Splits `order` into 1..4 contiguous chunks of at least two members, widens
// each chunk but the last into its right neighbour by a random fraction, and
// recurses until `levels` levels are built.
GroupNode random_subtree(std::vector<HypothesisIndex> order, std::size_t levels,
                         double max_overlap, Rng& rng) {
  GroupNode node;
  node.members = order;
  if (levels == 0) {
    return node;
  }
  const std::size_t size = order.size();
  const std::size_t cap = std::max<std::size_t>(1, size / 4);
  const std::size_t k = std::min(uniform_size(rng, 2, 4), cap);
  const std::size_t base = size / k;
  const auto jitter_span = static_cast<long>(base / 4);

  std::vector<std::size_t> cuts{0};
  for (std::size_t j = 1; j < k; ++j) {
    const long jitter = jitter_span > 0
                            ? std::uniform_int_distribution<long>(-jitter_span, jitter_span)(rng)
                            : 0;
    cuts.push_back(static_cast<std::size_t>(static_cast<long>(j * size / k) + jitter));
  }
  cuts.push_back(size);

  const double overlap = uniform_real(rng, 0.0, max_overlap);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t start = cuts[j];
    std::size_t end = cuts[j + 1];
    if (j + 1 < k) {
      end = std::min(size, end + static_cast<std::size_t>(overlap * static_cast<double>(end - start)));
    }
    std::vector<HypothesisIndex> slice(order.begin() + static_cast<long>(start),
                                       order.begin() + static_cast<long>(end));
    node.children.push_back(random_subtree(std::move(slice), levels - 1, max_overlap, rng));
  }
  return node;
}

std::vector<HypothesisIndex> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<HypothesisIndex> order(n);
  std::iota(order.begin(), order.end(), HypothesisIndex{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

HierTree random_partition(std::size_t n, Rng& rng) {
  const std::size_t m = uniform_size(rng, 2, std::min<std::size_t>(6, n / 4));
  const std::vector<HypothesisIndex> order = shuffled_indices(n, rng);
  std::vector<std::vector<HypothesisIndex>> groups(m);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t g = j < 2 * m ? j % m : uniform_size(rng, 0, m - 1);
    groups[g].push_back(order[j]);
  }
  return HierTree::one_level(groups);
}

// Leaf-level null proportions drawn in [margin, 1 - margin]; each hypothesis
// takes the proportion of the first leaf (in random order) that holds it.
TruthAssignment random_truth(const HierTree& tree, double margin, Rng& rng) {
  const std::size_t n = tree.size();
  std::vector<std::size_t> leaves(tree.leaves().begin(), tree.leaves().end());
  std::shuffle(leaves.begin(), leaves.end(), rng);
  std::vector<bool> assigned(n, false);
  TruthAssignment truth{std::vector<bool>(n, false)};
  for (const std::size_t leaf : leaves) {
    const double pi = uniform_real(rng, margin, 1.0 - margin);
    for (const HypothesisIndex i : tree.members(leaf)) {
      if (!assigned[i]) {
        assigned[i] = true;
        truth.is_null[i] = uniform_real(rng, 0.0, 1.0) < pi;
      }
    }
  }
  return truth;
}

// Flips one member of every all-null or all-signal leaf; gives up after a
// few passes when overlapping leaves keep undoing each other.
bool repair_truth(const ClassificationForest& forest, TruthAssignment& truth, Rng& rng) {
  for (int pass = 0; pass < 20; ++pass) {
    bool changed = false;
    for (const HierTree& tree : forest.trees) {
      for (std::size_t node = 0; node < tree.nodes().size(); ++node) {
        const auto members = tree.members(node);
        const GroupStats stats = group_stats(members, truth);
        if (stats.n0 == 0 || stats.n0 == stats.n) {
          const HypothesisIndex i = members[uniform_size(rng, 0, members.size() - 1)];
          truth.is_null[i] = !truth.is_null[i];
          changed = true;
        }
      }
    }
    if (!changed) {
      return true;
    }
  }
  return false;
}

TrialConfig draw_config(ConfigShape shape, std::uint64_t seed, const GeneratorBounds& b) {
  Rng rng(seed);
  TrialConfig c;
  c.shape = shape;
  c.seed = seed;
  const std::size_t n = uniform_size(rng, b.min_n, b.max_n);
  c.forest.n = n;

  switch (shape) {
    case ConfigShape::flat:
      c.forest.trees.push_back(HierTree::flat(n));
      break;
    case ConfigShape::oneway_overlap: {
      c.forest.trees.emplace_back(random_subtree(index_range(0, n), 1, b.max_overlap, rng));
      const std::size_t groups = c.forest.trees[0].leaves().size();
      for (std::size_t g = 0; g < groups; ++g) {
        c.group_effects.push_back(std::exp(uniform_real(rng, std::log(0.2), std::log(5.0))));
      }
      break;
    }
    case ConfigShape::hierarchical: {
      const std::size_t depth = uniform_size(rng, 1, std::max<std::size_t>(1, b.max_depth));
      c.forest.trees.emplace_back(random_subtree(index_range(0, n), depth, b.max_overlap, rng));
      break;
    }
    case ConfigShape::sway: {
      const std::size_t s = uniform_size(rng, 2, std::max<std::size_t>(2, b.max_trees));
      for (std::size_t t = 0; t < s; ++t) {
        c.forest.trees.push_back(random_partition(n, rng));
      }
      break;
    }
    case ConfigShape::generalized: {
      const std::size_t s = uniform_size(rng, 2, std::max<std::size_t>(2, b.max_trees));
      for (std::size_t t = 0; t < s; ++t) {
        const std::size_t depth = uniform_size(rng, 1, std::max<std::size_t>(1, b.max_depth));
        c.forest.trees.emplace_back(
            random_subtree(shuffled_indices(n, rng), depth, b.max_overlap, rng));
      }
      break;
    }
  }

  c.truth = random_truth(c.forest.trees[0], b.pi0_margin, rng);
  if (b.non_degenerate && !repair_truth(c.forest, c.truth, rng)) {
    c.forest.trees.clear();  // signals a failed draw
  }
  c.pvalues.resize(n);
  for (double& p : c.pvalues) {
    p = uniform_real(rng, 0.0, 1.0);
  }
  return c;
}

}  // namespace

TrialConfig make_trial_config(ConfigShape shape, std::uint64_t seed, const GeneratorBounds& bounds) {
  if (bounds.min_n < 8 || bounds.min_n > bounds.max_n) {
    throw std::invalid_argument("make_trial_config: need 8 <= min_n <= max_n");
  }
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    TrialConfig c = draw_config(shape, attempt == 0 ? seed : derive_seed(seed, attempt), bounds);
    if (!c.forest.trees.empty()) {
      c.seed = seed;
      return c;
    }
  }
  throw std::runtime_error("make_trial_config: no non-degenerate configuration found");
}

std::string config_digest(const TrialConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](std::uint64_t x) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (x >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(config.shape));
  feed(config.forest.n);
  for (const HierTree& tree : config.forest.trees) {
    feed(tree.nodes().size());
    for (std::size_t node = 0; node < tree.nodes().size(); ++node) {
      feed(tree.nodes()[node].depth);
      feed(tree.members(node).size());
      for (const HypothesisIndex i : tree.members(node)) {
        feed(i);
      }
    }
  }
  for (const bool b : config.truth.is_null) {
    feed(b ? 1 : 0);
  }
  for (const double p : config.pvalues) {
    feed(std::bit_cast<std::uint64_t>(p));
  }
  for (const double w : config.group_effects) {
    feed(std::bit_cast<std::uint64_t>(w));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Sweep -----------------------------------------------------------------------

std::vector<std::string> sweep_identities() {
  return {"condition1.flat",        "condition1.oneway_overlap", "condition1.hierarchical",
          "condition1.sway",        "condition1.generalized",    "reduction.depth0",
          "reduction.oneway",       "reduction.single_tree",     "reduction.recursion",
          "reduction.sway_generalized", "stepup.brute_force",    "loo.flat",
          "loo.hierarchical",       "loo.sway",                  "loo.generalized",
          "loo.oneway_routes",      "monotone.flat",             "monotone.hierarchical",
          "monotone.sway",          "monotone.generalized"};
}

std::vector<IdentityReport> run_validation_sweep(const SweepOptions& o) {
  require_lambda(o.lambda);
  std::vector<IdentityReport> out;
  out.reserve(o.trials * sweep_identities().size());

  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(o.seed, t);
    const auto config = [&](ConfigShape shape) {
      return make_trial_config(shape, derive_seed(trial_seed, static_cast<std::uint64_t>(shape)),
                               o.bounds);
    };
    const TrialConfig flat = config(ConfigShape::flat);
    const TrialConfig oneway = config(ConfigShape::oneway_overlap);
    const TrialConfig hier = config(ConfigShape::hierarchical);
    const TrialConfig sway = config(ConfigShape::sway);
    const TrialConfig gen = config(ConfigShape::generalized);
    Rng rng(derive_seed(trial_seed, 99));

    const auto emit = [&](IdentityReport r, std::string name, const TrialConfig& c) {
      r.identity = std::move(name);
      r.digest = config_digest(c);
      r.seed = c.seed;
      r.trial = t;
      out.push_back(std::move(r));
    };
    const auto corrupted = [&](WeightVector w, const TruthAssignment& truth) {
      if (o.corrupt) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (truth.is_null[i] && std::isfinite(w[i]) && w[i] > 0.0) {
            w.mutable_values()[i] *= 2.0;
            break;
          }
        }
      }
      return w;
    };
    const auto oneway_groups = [](const HierTree& tree) {
      std::vector<std::vector<HypothesisIndex>> groups;
      for (const std::size_t leaf : tree.leaves()) {
        groups.emplace_back(tree.members(leaf).begin(), tree.members(leaf).end());
      }
      return groups;
    };

    emit(check_condition1(corrupted(oracle_flat_weights(flat.truth), flat.truth), flat.truth),
         "condition1.flat", flat);
    emit(check_condition1(
             corrupted(oracle_overlap_oneway_weights(oneway_groups(oneway.forest.trees[0]),
                                                     oneway.group_effects, oneway.truth),
                       oneway.truth),
             oneway.truth),
         "condition1.oneway_overlap", oneway);
    emit(check_condition1(corrupted(oracle_hier_weights(hier.forest.trees[0], hier.truth),
                                    hier.truth),
                          hier.truth),
         "condition1.hierarchical", hier);
    emit(check_condition1(corrupted(oracle_sway_weights(sway.forest, sway.truth), sway.truth),
                          sway.truth),
         "condition1.sway", sway);
    emit(check_condition1(corrupted(oracle_gen_weights(gen.forest, gen.truth), gen.truth),
                          gen.truth),
         "condition1.generalized", gen);

    emit(check_depth0_reduction(flat.truth), "reduction.depth0", flat);
    emit(check_oneway_reduction(sway.forest.trees[0], sway.truth), "reduction.oneway", sway);
    emit(check_single_tree_reduction(hier.forest.trees[0], hier.truth), "reduction.single_tree",
         hier);
    emit(check_recursion_equivalence(hier.forest.trees[0], hier.truth), "reduction.recursion",
         hier);
    emit(check_sway_generalized_agreement(sway.forest, sway.truth), "reduction.sway_generalized",
         sway);
    emit(check_step_up(hier.pvalues, oracle_hier_weights(hier.forest.trees[0], hier.truth),
                       o.alpha),
         "stepup.brute_force", hier);

    const double lambda = o.lambda;
    const WeightFn flat_fn = [lambda](std::span<const double> p) {
      return adaptive_flat_weights(p, lambda);
    };
    const WeightFn hier_fn = [&hier, lambda](std::span<const double> p) {
      return da_hier_weights(hier.forest.trees[0], p, lambda);
    };
    const WeightFn sway_fn = [&sway, lambda](std::span<const double> p) {
      return da_sway_weights(sway.forest, p, lambda);
    };
    const WeightFn gen_fn = [&gen, lambda](std::span<const double> p) {
      return da_gen_weights(gen.forest, p, lambda);
    };

    emit(check_loo_bound(flat_fn, flat.pvalues, flat.truth), "loo.flat", flat);
    emit(check_loo_bound(hier_fn, hier.pvalues, hier.truth), "loo.hierarchical", hier);
    emit(check_loo_bound(sway_fn, sway.pvalues, sway.truth), "loo.sway", sway);
    emit(check_loo_bound(gen_fn, gen.pvalues, gen.truth), "loo.generalized", gen);
    emit(check_loo_routes(sway.forest.trees[0], sway.pvalues, sway.truth, lambda),
         "loo.oneway_routes", sway);

    emit(check_monotone(flat_fn, flat.pvalues, o.monotone_moves, rng), "monotone.flat", flat);
    emit(check_monotone(hier_fn, hier.pvalues, o.monotone_moves, rng), "monotone.hierarchical",
         hier);
    emit(check_monotone(sway_fn, sway.pvalues, o.monotone_moves, rng), "monotone.sway", sway);
    emit(check_monotone(gen_fn, gen.pvalues, o.monotone_moves, rng), "monotone.generalized", gen);
  }
  return out;
}

}  // namespace gbh
