// Independent reference computations for the unit and acceptance tests.
// Nothing here calls into the weight or step-up code under test.
#ifndef GBH_TESTS_ORACLES_HPP
#define GBH_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "gbh/classification.hpp"

namespace gbh::oracle {

inline std::vector<double> multiply(const std::vector<double>& p, const std::vector<double>& w) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = std::isinf(w[i]) ? std::numeric_limits<double>::infinity() : p[i] * w[i];
  }
  return out;
}

/// k = max{ j : #{i : W_i P_i <= j alpha / N} >= j }; reject W_i P_i <= k alpha / N.
inline std::vector<bool> brute_force_step_up(const std::vector<double>& p,
                                             const std::vector<double>& w, double alpha) {
  const std::vector<double> wp = multiply(p, w);
  const std::size_t n = wp.size();
  std::size_t k = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double cut = static_cast<double>(j) * alpha / static_cast<double>(n);
    std::size_t below = 0;
    for (const double x : wp) {
      below += x <= cut ? 1 : 0;
    }
    if (below >= j) {
      k = j;
    }
  }
  std::vector<bool> out(n, false);
  const double cut = static_cast<double>(k) * alpha / static_cast<double>(n);
  for (std::size_t i = 0; i < n && k > 0; ++i) {
    out[i] = wp[i] <= cut;
  }
  return out;
}

inline double null_fraction(const std::vector<HypothesisIndex>& members,
                            const std::vector<bool>& is_null) {
  std::size_t n0 = 0;
  for (const auto i : members) {
    n0 += is_null[i] ? 1 : 0;
  }
  return static_cast<double>(n0) / static_cast<double>(members.size());
}

inline std::size_t null_count(const std::vector<HypothesisIndex>& members,
                              const std::vector<bool>& is_null) {
  std::size_t n0 = 0;
  for (const auto i : members) {
    n0 += is_null[i] ? 1 : 0;
  }
  return n0;
}

struct Leaf {
  std::vector<HypothesisIndex> members;
  double effect;
};

// Top-down w(root) = pi0, w(level 1) = (1 - pi0) odds, w = pi0 (1 - pi0) / w(parent) odds.
inline void collect_oracle_leaves(const GroupNode& node, std::size_t depth, double parent_effect,
                                  double pi0, const std::vector<bool>& is_null,
                                  std::vector<Leaf>& out) {
  double effect = pi0;
  if (depth >= 1) {
    const double pi = null_fraction(node.members, is_null);
    const double odds = pi / (1.0 - pi);
    effect = depth == 1 ? (1.0 - pi0) * odds : pi0 * (1.0 - pi0) / parent_effect * odds;
  }
  if (node.children.empty()) {
    out.push_back({node.members, effect});
    return;
  }
  for (const auto& child : node.children) {
    collect_oracle_leaves(child, depth + 1, effect, pi0, is_null, out);
  }
}

/// 1/W_i = (sum_leaf n0/w / N)^-1 sum_{leaf containing i} 1/w, by direct scanning.
inline std::vector<double> assemble(const std::vector<Leaf>& leaves, std::size_t n,
                                    const std::vector<double>& leaf_null_counts) {
  double d = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    d += leaf_null_counts[l] / leaves[l].effect;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& leaf : leaves) {
      if (std::binary_search(leaf.members.begin(), leaf.members.end(), i)) {
        s += 1.0 / leaf.effect;
      }
    }
    w[i] = (d / static_cast<double>(n)) / s;
  }
  return w;
}

/// Hierarchical oracle weights for non-degenerate truth (every group mixed).
inline std::vector<double> hier_weights(const GroupNode& root, const std::vector<bool>& is_null) {
  const double pi0 = null_fraction(root.members, is_null);
  if (root.children.empty()) {
    return std::vector<double>(root.members.size(), pi0);
  }
  std::vector<Leaf> leaves;
  collect_oracle_leaves(root, 0, pi0, pi0, is_null, leaves);
  std::vector<double> n0;
  for (const auto& leaf : leaves) {
    n0.push_back(static_cast<double>(null_count(leaf.members, is_null)));
  }
  return assemble(leaves, root.members.size(), n0);
}

inline std::vector<double> harmonic_mean(const std::vector<std::vector<double>>& parts) {
  std::vector<double> out(parts.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double inv = 0.0;
    for (const auto& part : parts) {
      inv += 1.0 / part[i];
    }
    out[i] = static_cast<double>(parts.size()) / inv;
  }
  return out;
}

/// S-way oracle weights on partitions: harmonic mean of pi_g (1 - pi0) / (1 - pi_g).
inline std::vector<double> sway_weights(const ClassificationForest& forest,
                                        const std::vector<bool>& is_null) {
  const double pi0 = null_fraction(forest.trees[0].root().members, is_null);
  std::vector<std::vector<double>> parts;
  for (const auto& tree : forest.trees) {
    std::vector<double> w(forest.n);
    for (const auto& g : tree.root().children) {
      const double pi = null_fraction(g.members, is_null);
      for (const auto i : g.members) {
        w[i] = pi * (1.0 - pi0) / (1.0 - pi);
      }
    }
    parts.push_back(std::move(w));
  }
  return harmonic_mean(parts);
}

inline double storey(const std::vector<double>& p, const std::vector<HypothesisIndex>& members,
                     double lambda) {
  std::size_t r = 0;
  for (const auto i : members) {
    r += p[i] <= lambda ? 1 : 0;
  }
  return (static_cast<double>(members.size() - r) + 1.0) / (1.0 - lambda);
}

/// Data-adaptive weights of a depth-1 partition: W_g = nhat0_g / N * m.
inline std::vector<double> da_oneway_partition(const GroupNode& root, const std::vector<double>& p,
                                               double lambda) {
  const double n = static_cast<double>(root.members.size());
  const double m = static_cast<double>(root.children.size());
  std::vector<double> w(root.members.size());
  for (const auto& g : root.children) {
    const double est = storey(p, g.members, lambda);
    for (const auto i : g.members) {
      w[i] = est / n * m;
    }
  }
  return w;
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
inline double ks_uniform_distance(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, xs[i] - lo, hi - xs[i]});
  }
  return d;
}

/// Asymptotic Kolmogorov tail P(sqrt(n) D > t).
inline double kolmogorov_tail(double t) {
  if (t <= 0.0) {
    return 1.0;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) {
      break;
    }
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace gbh::oracle

#endif  // GBH_TESTS_ORACLES_HPP
