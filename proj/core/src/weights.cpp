#include "gbh/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gbh/numeric.hpp"

namespace gbh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double reciprocal(double w) noexcept {
  if (w == 0.0) {
    return kInf;
  }
  if (std::isinf(w)) {
    return 0.0;
  }
  return 1.0 / w;
}

/// pi / (1 - pi) for a proportion strictly inside (0, 1).
double odds(double pi) noexcept { return pi / (1.0 - pi); }

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(want) +
                                " values, got " + std::to_string(got));
  }
}

std::size_t count_at_most(std::span<const double> pvalues, std::span<const HypothesisIndex> members,
                          double lambda) {
  std::size_t r = 0;
  for (HypothesisIndex i : members) {
    if (pvalues[i] <= lambda) {
      ++r;
    }
  }
  return r;
}

double storey_count(std::size_t n, std::size_t r, double lambda) noexcept {
  return (static_cast<double>(n - r) + 1.0) / (1.0 - lambda);
}

std::vector<GroupStats> node_stats(const HierTree& tree, const TruthAssignment& truth) {
  std::vector<GroupStats> stats;
  stats.reserve(tree.nodes().size());
  for (std::size_t v = 0; v < tree.nodes().size(); ++v) {
    stats.push_back(group_stats(tree.members(v), truth));
  }
  return stats;
}

}  // namespace

void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1), got " + std::to_string(lambda));
  }
}

NullCountEstimate storey_null_estimate(std::span<const double> pvalues, double lambda) {
  require_lambda(lambda);
  NullCountEstimate est;
  est.lambda = lambda;
  est.n = pvalues.size();
  est.r_lambda = static_cast<std::size_t>(
      std::count_if(pvalues.begin(), pvalues.end(), [lambda](double p) { return p <= lambda; }));
  est.n_hat0 = storey_count(est.n, est.r_lambda, lambda);
  return est;
}

NullCountEstimate storey_null_estimate(std::span<const double> pvalues,
                                       std::span<const HypothesisIndex> members, double lambda) {
  require_lambda(lambda);
  NullCountEstimate est;
  est.lambda = lambda;
  est.n = members.size();
  est.r_lambda = count_at_most(pvalues, members, lambda);
  est.n_hat0 = storey_count(est.n, est.r_lambda, lambda);
  return est;
}

WeightVector harmonic_combine(std::span<const WeightVector> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("harmonic_combine: no weight vectors");
  }
  const std::size_t n = parts.front().size();
  const double s = static_cast<double>(parts.size());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double inv = 0.0;
    for (const auto& part : parts) {
      require_size(part.size(), n, "harmonic_combine");
      inv += reciprocal(part[i]);
    }
    out[i] = reciprocal(inv / s);
  }
  return WeightVector(std::move(out));
}

WeightVector assemble_weights(const HierTree& tree, std::span<const double> leaf_effect,
                              std::span<const double> leaf_null_count) {
  require_size(leaf_effect.size(), tree.nodes().size(), "assemble_weights effects");
  require_size(leaf_null_count.size(), tree.nodes().size(), "assemble_weights null counts");

  const std::size_t n = tree.size();
  std::vector<double> inv(tree.nodes().size(), 0.0);
  CompensatedSum denominator;
  for (std::size_t leaf : tree.leaves()) {
    inv[leaf] = reciprocal(leaf_effect[leaf]);
    // A zero effect only comes with a zero null count; that leaf adds nothing.
    if (leaf_null_count[leaf] != 0.0) {
      denominator += leaf_null_count[leaf] * inv[leaf];
    }
  }
  const double scale = denominator.value() / static_cast<double>(n);

  std::vector<double> w(n);
  for (HypothesisIndex i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t leaf : tree.leaves_containing(i)) {
      s += inv[leaf];
    }
    if (std::isinf(s)) {
      w[i] = 0.0;
    } else if (s == 0.0) {
      w[i] = kInf;
    } else {
      w[i] = scale / s;
    }
  }
  return WeightVector(std::move(w));
}

WeightVector oracle_flat_weights(const TruthAssignment& truth) {
  return WeightVector(truth.size(), truth.pi0());
}

WeightVector oracle_overlap_oneway_weights(
    const std::vector<std::vector<HypothesisIndex>>& groups, std::span<const double> group_effects,
    const TruthAssignment& truth) {
  require_size(group_effects.size(), groups.size(), "oracle_overlap_oneway_weights effects");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw std::invalid_argument("group " + std::to_string(g + 1) + " is empty");
    }
    if (!(std::isfinite(group_effects[g]) && group_effects[g] > 0.0)) {
      throw std::invalid_argument("group effect " + std::to_string(g + 1) +
                                  " must be finite and positive");
    }
  }
  const HierTree tree = HierTree::one_level(groups);
  if (tree.size() != truth.size() ||
      (tree.size() > 0 && tree.root().members.back() != truth.size() - 1)) {
    throw std::invalid_argument("every hypothesis must belong to at least one group");
  }

  std::vector<double> effect(tree.nodes().size(), kNaN);
  std::vector<double> n0(tree.nodes().size(), 0.0);
  const auto& root = tree.nodes()[0];
  for (std::size_t k = 0; k < root.children.size(); ++k) {
    const std::size_t leaf = root.children[k];
    effect[leaf] = group_effects[k];
    n0[leaf] = static_cast<double>(group_stats(tree.members(leaf), truth).n0);
  }
  return assemble_weights(tree, effect, n0);
}

std::vector<double> oracle_group_effects(const HierTree& tree, const TruthAssignment& truth,
                                         Recursion recursion) {
  require_size(truth.size(), tree.size(), "oracle_group_effects truth");
  const auto stats = node_stats(tree, truth);
  const auto nodes = tree.nodes();
  const double pi0 = stats[0].pi0;

  std::vector<double> w(nodes.size(), kNaN);
  w[0] = pi0;
  for (std::size_t v = 1; v < nodes.size(); ++v) {
    const double pi = stats[v].pi0;
    if (stats[v].n0 == stats[v].n) {
      w[v] = kInf;
      continue;
    }
    if (stats[v].n0 == 0) {
      w[v] = 0.0;
      continue;
    }
    // The group holds nulls and signals, so every ancestor does too and the
    // parent effects below are finite and positive.
    const std::size_t parent = nodes[v].parent;
    if (recursion == Recursion::forward || nodes[v].depth == 1) {
      w[v] = pi0 * (1.0 - pi0) / w[parent] * odds(pi);
    } else {
      const std::size_t grandparent = nodes[parent].parent;
      w[v] = w[grandparent] / odds(stats[parent].pi0) * odds(pi);
    }
  }
  return w;
}

WeightVector oracle_hier_weights(const HierTree& tree, const TruthAssignment& truth,
                                 Recursion recursion) {
  require_size(truth.size(), tree.size(), "oracle_hier_weights truth");
  const double pi0 = truth.pi0();
  if (tree.depth() == 0 || pi0 == 0.0 || pi0 == 1.0) {
    return oracle_flat_weights(truth);
  }
  const auto effects = oracle_group_effects(tree, truth, recursion);
  std::vector<double> n0(tree.nodes().size(), 0.0);
  for (std::size_t leaf : tree.leaves()) {
    n0[leaf] = static_cast<double>(group_stats(tree.members(leaf), truth).n0);
  }
  return assemble_weights(tree, effects, n0);
}

bool is_sway_partition(const ClassificationForest& forest) {
  for (const auto& tree : forest.trees) {
    if (tree.depth() != 1 || tree.size() != forest.n) {
      return false;
    }
    for (HypothesisIndex i = 0; i < forest.n; ++i) {
      if (tree.leaves_containing(i).size() != 1) {
        return false;
      }
    }
  }
  return !forest.trees.empty();
}

namespace {

void require_sway(const ClassificationForest& forest) {
  if (!is_sway_partition(forest)) {
    throw std::invalid_argument(
        "S-way weights need every classification to be a depth-1 partition of all hypotheses");
  }
}

void require_forest(const ClassificationForest& forest) {
  if (forest.trees.empty()) {
    throw std::invalid_argument("forest has no classification trees");
  }
}

}  // namespace

WeightVector oracle_sway_weights(const ClassificationForest& forest, const TruthAssignment& truth) {
  require_sway(forest);
  require_size(truth.size(), forest.n, "oracle_sway_weights truth");
  const double pi0 = truth.pi0();
  if (pi0 == 0.0 || pi0 == 1.0) {
    return oracle_flat_weights(truth);
  }

  std::vector<double> inv(forest.n, 0.0);
  for (const auto& tree : forest.trees) {
    std::vector<double> group_inv(tree.nodes().size(), 0.0);
    for (std::size_t leaf : tree.leaves()) {
      const auto stats = group_stats(tree.members(leaf), truth);
      double w;
      if (stats.n0 == stats.n) {
        w = kInf;
      } else if (stats.n0 == 0) {
        w = 0.0;
      } else {
        w = stats.pi0 * (1.0 - pi0) / (1.0 - stats.pi0);
      }
      group_inv[leaf] = reciprocal(w);
    }
    for (HypothesisIndex i = 0; i < forest.n; ++i) {
      inv[i] += group_inv[tree.leaves_containing(i).front()];
    }
  }
  const double s = static_cast<double>(forest.s_count());
  std::vector<double> w(forest.n);
  for (HypothesisIndex i = 0; i < forest.n; ++i) {
    w[i] = reciprocal(inv[i] / s);
  }
  return WeightVector(std::move(w));
}

WeightVector oracle_gen_weights(const ClassificationForest& forest, const TruthAssignment& truth) {
  require_forest(forest);
  std::vector<WeightVector> parts;
  parts.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) {
    parts.push_back(oracle_hier_weights(tree, truth));
  }
  return parts.size() == 1 ? parts.front() : harmonic_combine(parts);
}

WeightVector adaptive_flat_weights(std::span<const double> pvalues, double lambda) {
  const auto est = storey_null_estimate(pvalues, lambda);
  return WeightVector(pvalues.size(), est.n_hat0 / static_cast<double>(pvalues.size()));
}

EstimatedEffects estimated_group_effects(const HierTree& tree, std::span<const double> pvalues,
                                         double lambda, AncestorEstimate ancestors) {
  require_lambda(lambda);
  require_size(pvalues.size(), tree.size(), "estimated_group_effects p-values");
  const auto nodes = tree.nodes();
  const double n_total = static_cast<double>(tree.size());

  EstimatedEffects out;
  out.n_hat0.assign(nodes.size(), kNaN);
  out.effect.assign(nodes.size(), kNaN);

  if (ancestors == AncestorEstimate::direct) {
    for (std::size_t v = 0; v < nodes.size(); ++v) {
      out.n_hat0[v] = storey_null_estimate(pvalues, tree.members(v), lambda).n_hat0;
    }
    out.effect[0] = out.n_hat0[0] / n_total;
    for (std::size_t v = 1; v < nodes.size(); ++v) {
      const std::size_t parent = nodes[v].parent;
      const double siblings = static_cast<double>(nodes[parent].children.size());
      if (nodes[v].depth == 1) {
        out.effect[v] = out.n_hat0[v] / n_total * siblings;
      } else {
        const std::size_t grandparent = nodes[parent].parent;
        out.effect[v] = out.effect[grandparent] * (out.n_hat0[v] / out.n_hat0[parent]) * siblings;
      }
    }
    return out;
  }

  // Multiplicative ancestors: walk each leaf's own lineage.
  out.n_hat0[0] = storey_null_estimate(pvalues, lambda).n_hat0;
  out.effect[0] = out.n_hat0[0] / n_total;
  std::vector<std::size_t> lineage;
  std::vector<double> est;
  std::vector<double> eff;
  for (std::size_t leaf : tree.leaves()) {
    if (leaf == 0) {
      continue;
    }
    lineage.clear();
    for (std::size_t v = leaf; v != HierTree::npos; v = nodes[v].parent) {
      lineage.push_back(v);
    }
    std::reverse(lineage.begin(), lineage.end());  // root ... leaf
    const std::size_t depth = lineage.size() - 1;

    est.assign(depth + 1, 0.0);
    est[depth] = storey_null_estimate(pvalues, tree.members(leaf), lambda).n_hat0;
    for (std::size_t l = depth; l >= 1; --l) {
      est[l - 1] = static_cast<double>(nodes[lineage[l - 1]].children.size()) * est[l];
    }
    eff.assign(depth + 1, 0.0);
    eff[0] = out.effect[0];
    for (std::size_t l = 1; l <= depth; ++l) {
      const double siblings = static_cast<double>(nodes[lineage[l - 1]].children.size());
      eff[l] = l == 1 ? est[1] / n_total * siblings : eff[l - 2] * (est[l] / est[l - 1]) * siblings;
    }
    out.n_hat0[leaf] = est[depth];
    out.effect[leaf] = eff[depth];
  }
  return out;
}

WeightVector da_hier_weights(const HierTree& tree, std::span<const double> pvalues, double lambda,
                             AncestorEstimate ancestors) {
  require_lambda(lambda);
  require_size(pvalues.size(), tree.size(), "da_hier_weights p-values");
  if (tree.depth() == 0) {
    return adaptive_flat_weights(pvalues, lambda);
  }
  const auto est = estimated_group_effects(tree, pvalues, lambda, ancestors);
  return assemble_weights(tree, est.effect, est.n_hat0);
}

WeightVector da_sway_weights(const ClassificationForest& forest, std::span<const double> pvalues,
                             double lambda) {
  require_lambda(lambda);
  require_sway(forest);
  require_size(pvalues.size(), forest.n, "da_sway_weights p-values");
  const double n_total = static_cast<double>(forest.n);

  std::vector<double> inv(forest.n, 0.0);
  for (const auto& tree : forest.trees) {
    const double groups = static_cast<double>(tree.leaves().size());
    std::vector<double> group_inv(tree.nodes().size(), 0.0);
    for (std::size_t leaf : tree.leaves()) {
      const auto est = storey_null_estimate(pvalues, tree.members(leaf), lambda);
      group_inv[leaf] = 1.0 / (est.n_hat0 / n_total * groups);
    }
    for (HypothesisIndex i = 0; i < forest.n; ++i) {
      inv[i] += group_inv[tree.leaves_containing(i).front()];
    }
  }
  const double s = static_cast<double>(forest.s_count());
  std::vector<double> w(forest.n);
  for (HypothesisIndex i = 0; i < forest.n; ++i) {
    w[i] = s / inv[i];
  }
  return WeightVector(std::move(w));
}

WeightVector da_gen_weights(const ClassificationForest& forest, std::span<const double> pvalues,
                            double lambda, AncestorEstimate ancestors) {
  require_forest(forest);
  std::vector<WeightVector> parts;
  parts.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) {
    parts.push_back(da_hier_weights(tree, pvalues, lambda, ancestors));
  }
  return parts.size() == 1 ? parts.front() : harmonic_combine(parts);
}

}  // namespace gbh
