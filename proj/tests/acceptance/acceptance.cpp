// Acceptance suite: one PASS/FAIL line per criterion, with indented detail
// lines. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gbh/numeric.hpp"
#include "gbh/simulate.hpp"
#include "gbh/testing.hpp"
#include "gbh/validate.hpp"
#include "gbh/weights.hpp"
#include "oracles.hpp"

namespace {

using namespace gbh;

constexpr std::uint64_t kSeed = 20240607;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, std::string line) {
    pass = pass && ok;
    details.push_back((ok ? "ok   " : "FAIL ") + std::move(line));
  }
  void note(std::string line) { details.push_back("     " + std::move(line)); }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string g(double x) { return fmt("%.6g", x); }

const std::vector<ConfigShape> kShapes{ConfigShape::flat, ConfigShape::oneway_overlap,
                                       ConfigShape::hierarchical, ConfigShape::sway,
                                       ConfigShape::generalized};

std::vector<std::vector<HypothesisIndex>> leaf_groups(const HierTree& tree) {
  std::vector<std::vector<HypothesisIndex>> groups;
  for (const std::size_t leaf : tree.leaves()) {
    groups.emplace_back(tree.members(leaf).begin(), tree.members(leaf).end());
  }
  return groups;
}

WeightVector oracle_for(const TrialConfig& c) {
  switch (c.shape) {
    case ConfigShape::flat: return oracle_flat_weights(c.truth);
    case ConfigShape::oneway_overlap:
      return oracle_overlap_oneway_weights(leaf_groups(c.forest.trees[0]), c.group_effects,
                                           c.truth);
    case ConfigShape::hierarchical: return oracle_hier_weights(c.forest.trees[0], c.truth);
    case ConfigShape::sway: return oracle_sway_weights(c.forest, c.truth);
    case ConfigShape::generalized: return oracle_gen_weights(c.forest, c.truth);
  }
  return {};
}

WeightFn adaptive_for(const TrialConfig& c, double lambda) {
  switch (c.shape) {
    case ConfigShape::flat:
      return [lambda](std::span<const double> p) { return adaptive_flat_weights(p, lambda); };
    case ConfigShape::hierarchical:
      return [&c, lambda](std::span<const double> p) {
        return da_hier_weights(c.forest.trees[0], p, lambda);
      };
    case ConfigShape::sway:
      return [&c, lambda](std::span<const double> p) {
        return da_sway_weights(c.forest, p, lambda);
      };
    default:
      return [&c, lambda](std::span<const double> p) {
        return da_gen_weights(c.forest, p, lambda);
      };
  }
}

TrialConfig config(ConfigShape shape, std::size_t trial) {
  return make_trial_config(shape, derive_seed(kSeed, static_cast<std::uint64_t>(shape), trial));
}

// Paired-electrode geometry with a random, non-degenerate truth and
// uniform p-values.
TrialConfig paired_config(std::size_t trial, std::size_t time_points) {
  TrialConfig c;
  c.shape = ConfigShape::generalized;
  c.seed = derive_seed(kSeed, 77, trial);
  c.forest = paired_region_forest(61, 6, time_points);
  Rng rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> margin(0.05, 0.95);
  std::vector<double> pa(61), pb(61);
  for (std::size_t e = 0; e < 61; ++e) {
    pa[e] = margin(rng);
    pb[e] = margin(rng);
  }
  for (;;) {
    c.truth.is_null.assign(c.forest.n, false);
    for (std::size_t a = 0; a < 61; ++a) {
      for (std::size_t b = 0; b < 61; ++b) {
        for (std::size_t t = 0; t < time_points; ++t) {
          c.truth.is_null[(a * 61 + b) * time_points + t] = u(rng) < 0.5 * (pa[a] + pb[b]);
        }
      }
    }
    bool fine = true;
    for (const auto& tree : c.forest.trees) {
      for (std::size_t v = 0; v < tree.nodes().size(); ++v) {
        const auto s = group_stats(tree.members(v), c.truth);
        fine = fine && s.n0 > 0 && s.n0 < s.n;
      }
    }
    if (fine) {
      break;
    }
  }
  c.pvalues.resize(c.forest.n);
  for (double& p : c.pvalues) {
    p = u(rng);
  }
  return c;
}

// 1 -------------------------------------------------------------------------

Outcome condition_one() {
  Outcome o;
  const std::size_t trials = 1000;
  for (ConfigShape shape : kShapes) {
    std::size_t fails = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto c = config(shape, t);
      const auto r = check_condition1(oracle_for(c), c.truth);
      fails += r.pass ? 0 : 1;
      worst = std::max(worst, std::abs(r.computed - r.target) / r.target);
    }
    o.check(fails == 0, std::string(to_string(shape)) + ": " + std::to_string(trials - fails) +
                            "/" + std::to_string(trials) + " within 1e-9 N, worst |sum-N|/N " +
                            g(worst));
  }
  std::size_t fails = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    const auto c = paired_config(t, 2);
    const auto r = check_condition1(oracle_gen_weights(c.forest, c.truth), c.truth);
    fails += r.pass ? 0 : 1;
    worst = std::max(worst, std::abs(r.computed - r.target) / r.target);
  }
  o.check(fails == 0, "paired-electrode forest (N=7442): " + std::to_string(20 - fails) +
                          "/20, worst |sum-N|/N " + g(worst));
  return o;
}

// 2 -------------------------------------------------------------------------

bool within_ulps(double x, double target, double ulps) {
  return std::abs(x - target) <= ulps * std::numeric_limits<double>::epsilon() * std::abs(target);
}

Outcome reductions() {
  Outcome o;
  const std::size_t trials = 1000;
  std::size_t depth0_exact = 0, oneway_ok = 0, recursion_ok = 0, single_ok = 0;
  double oneway_worst = 0.0, recursion_worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto f = config(ConfigShape::flat, t);
    depth0_exact += oracle_hier_weights(HierTree::flat(f.forest.n), f.truth) ==
                            oracle_flat_weights(f.truth)
                        ? 1
                        : 0;
    const auto s = config(ConfigShape::sway, t);
    const auto one = check_oneway_reduction(s.forest.trees[0], s.truth);
    oneway_ok += one.pass ? 1 : 0;
    oneway_worst = std::max(oneway_worst, one.computed);
    const auto h = config(ConfigShape::hierarchical, t);
    const auto rec = check_recursion_equivalence(h.forest.trees[0], h.truth);
    recursion_ok += rec.pass ? 1 : 0;
    recursion_worst = std::max(recursion_worst, rec.computed);
    single_ok += check_single_tree_reduction(h.forest.trees[0], h.truth).pass ? 1 : 0;
  }
  o.check(depth0_exact == trials,
          "L=0 equals pi0 bit for bit: " + std::to_string(depth0_exact) + "/1000");
  o.check(oneway_ok == trials, "L=1 partition equals (1-pi0)pi0_g/(1-pi0_g): " +
                                   std::to_string(oneway_ok) + "/1000, worst rel " +
                                   g(oneway_worst));
  o.check(recursion_ok == trials, "forward and alternating recursions: " +
                                      std::to_string(recursion_ok) + "/1000, worst rel " +
                                      g(recursion_worst));
  o.check(single_ok == trials,
          "S=1 generalized equals hierarchical: " + std::to_string(single_ok) + "/1000");

  const HierTree ten = HierTree::one_level({index_range(0, 4), index_range(4, 10)});
  const TruthAssignment ten_truth{
      {true, true, false, false, true, true, true, true, false, false}};
  const auto w = oracle_hier_weights(ten, ten_truth);
  bool ten_ok = true;
  for (std::size_t i = 0; i < 10; ++i) {
    ten_ok = ten_ok && within_ulps(w[i], i < 4 ? 0.4 : 0.8, 2.0);
  }
  o.check(ten_ok, "10-hypothesis example: W = (" + fmt("%.17g", w[0]) + ", " +
                      fmt("%.17g", w[9]) + "), expected (0.4, 0.8) within 2 ulp");

  const ClassificationForest grid{
      6, {HierTree::one_level({{0, 1, 2}, {3, 4, 5}}), HierTree::one_level({{0, 3}, {1, 4}, {2, 5}})}};
  const TruthAssignment grid_truth{{false, false, true, true, true, false}};
  const auto sw = oracle_sway_weights(grid, grid_truth);
  const bool grid_ok = within_ulps(sw[2], 1.0 / 3.0, 2.0) && within_ulps(sw[3], 2.0 / 3.0, 2.0) &&
                       within_ulps(sw[4], 2.0 / 3.0, 2.0);
  o.check(grid_ok, "2x3 S-way example: W = (" + fmt("%.17g", sw[2]) + ", " + fmt("%.17g", sw[3]) +
                       ", " + fmt("%.17g", sw[4]) + "), expected (1/3, 2/3, 2/3) within 2 ulp");
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome step_up() {
  Outcome o;
  Rng rng(derive_seed(kSeed, 3));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatched = 0, with_rejections = 0, max_n = 0;
  const std::size_t instances = 10000;
  for (std::size_t k = 0; k < instances; ++k) {
    const auto n = static_cast<std::size_t>(std::exp(u(rng) * std::log(2000.0)));
    max_n = std::max(max_n, n);
    std::vector<double> p(n), w(n);
    const double signal = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng) < signal ? std::pow(u(rng), 6.0) : u(rng);
      if (k % 4 == 1) {
        p[i] = std::round(p[i] * 200.0) / 200.0;  // heavy ties
      }
      const double r = u(rng);
      w[i] = k % 3 == 0 ? 1.0 : (r < 0.02 ? 0.0 : (r < 0.04 ? kInf : 0.1 + 3.0 * u(rng)));
    }
    const double alpha = 0.01 + 0.2 * u(rng);
    const auto got = weighted_bh(p, WeightVector(w), alpha).rejected;
    const auto want = oracle::brute_force_step_up(p, w, alpha);
    mismatched += got == want ? 0 : 1;
    with_rejections += std::count(want.begin(), want.end(), true) > 0 ? 1 : 0;
  }
  o.check(mismatched == 0, std::to_string(instances - mismatched) + "/10000 instances give the " +
                               "same rejection set as the quadratic rule (N up to " +
                               std::to_string(max_n) + ", " + std::to_string(with_rejections) +
                               " with rejections)");
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome proof_mechanics() {
  Outcome o;
  const double lambda = 0.5;
  const std::size_t configs = 500;
  const std::vector<ConfigShape> adaptive{ConfigShape::flat, ConfigShape::hierarchical,
                                          ConfigShape::sway, ConfigShape::generalized};
  for (ConfigShape shape : adaptive) {
    std::size_t fails = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < configs; ++t) {
      const auto c = config(shape, t);
      const auto r = check_loo_bound(adaptive_for(c, lambda), c.pvalues, c.truth);
      fails += r.pass ? 0 : 1;
      worst = std::max(worst, r.computed / r.target);
    }
    o.check(fails == 0, std::string("leave-one-out bound, ") + to_string(shape) + ": " +
                            std::to_string(configs - fails) + "/500 with sum <= N, max sum/N " +
                            g(worst));
  }
  {
    std::size_t fails = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      const auto c = paired_config(t, 1);
      const auto r = check_loo_bound(adaptive_for(c, lambda), c.pvalues, c.truth);
      fails += r.pass ? 0 : 1;
      worst = std::max(worst, r.computed / r.target);
    }
    o.check(fails == 0, "leave-one-out bound, paired-electrode forest (N=3721): " +
                            std::to_string(5 - fails) + "/5, max sum/N " + g(worst));
  }
  {
    std::size_t agree = 0;
    for (std::size_t t = 0; t < configs; ++t) {
      const auto c = config(ConfigShape::sway, t);
      agree += check_loo_routes(c.forest.trees[0], c.pvalues, c.truth, lambda).pass ? 1 : 0;
    }
    o.check(agree == configs, "closed form vs recomputation on L=1 partitions: " +
                                  std::to_string(agree) + "/500 within 1e-12");
  }

  const std::size_t moves = 20;  // 500 configurations x 20 moves = 10^4 perturbations
  for (ConfigShape shape : adaptive) {
    std::size_t violations = 0;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_depth;  // depth -> (viol, moves)
    Rng rng(derive_seed(kSeed, 4, static_cast<std::uint64_t>(shape)));
    for (std::size_t t = 0; t < configs; ++t) {
      const auto c = config(shape, t);
      const auto r = check_monotone(adaptive_for(c, lambda), c.pvalues, moves, rng);
      const auto v = static_cast<std::size_t>(r.computed);
      violations += v;
      std::size_t depth = 0;
      for (const auto& tree : c.forest.trees) {
        depth = std::max(depth, tree.depth());
      }
      by_depth[depth].first += v;
      by_depth[depth].second += moves;
    }
    std::string split;
    for (const auto& [depth, vm] : by_depth) {
      split += " L=" + std::to_string(depth) + ":" + std::to_string(vm.first) + "/" +
               std::to_string(vm.second);
    }
    o.check(violations == 0, std::string("monotonicity, ") + to_string(shape) + ": " +
                                 std::to_string(violations) + " of 10000 moves lowered a weight;" +
                                 split);
  }
  {
    std::size_t violations = 0;
    Rng rng(derive_seed(kSeed, 4, 99));
    for (std::size_t t = 0; t < 3; ++t) {
      const auto c = paired_config(t, 1);
      violations += static_cast<std::size_t>(
          check_monotone(adaptive_for(c, lambda), c.pvalues, 100, rng).computed);
    }
    o.check(violations == 0, "monotonicity, paired-electrode forest: " +
                                 std::to_string(violations) + " of 300 moves lowered a weight");
  }
  return o;
}

// 5-7 -----------------------------------------------------------------------

bool fdr_controlled(const SummaryRow& r, double alpha) {
  return r.mean_fdp <= alpha + 2.0 * r.se_fdp;
}

Outcome fdr_control(const SimulationSummary& s) {
  Outcome o;
  for (const auto& r : s.rows) {
    o.check(fdr_controlled(r, s.plan.alpha),
            std::string(method_name(r.method)) + " 1-pi0=" + g(r.density) + ": FDR " +
                fmt("%.4f", r.mean_fdp) + " <= 0.05 + 2*" + fmt("%.4f", r.se_fdp) +
                ", power " + fmt("%.4f", r.mean_power));
  }
  return o;
}

const SummaryRow& row_of(const SimulationSummary& s, Method m, double density) {
  for (const auto& r : s.rows) {
    if (r.method == m && r.density == density) {
      return r;
    }
  }
  throw std::logic_error("missing summary row");
}

Outcome power_ordering(const SimulationSummary& s) {
  Outcome o;
  for (double d : s.plan.density_grid) {
    if (d < 0.1 - 1e-12) {
      continue;
    }
    for (const auto& [better, base] : {std::pair{Method::heir_gbh, Method::bh},
                                       std::pair{Method::daheir_gbh, Method::adaptive_bh}}) {
      const auto& a = row_of(s, better, d);
      const auto& b = row_of(s, base, d);
      const double se = std::max(a.se_power, b.se_power);
      o.check(a.mean_power >= b.mean_power - se,
              std::string(method_name(better)) + " vs " + std::string(method_name(base)) +
                  " at 1-pi0=" + g(d) + ": " + fmt("%.4f", a.mean_power) + " vs " +
                  fmt("%.4f", b.mean_power) + " (SE " + fmt("%.4f", se) + ")");
    }
  }
  return o;
}

Outcome dependence(const SimulationSummary& s) {
  Outcome o;
  for (const auto& r : s.rows) {
    if (r.method == Method::heir_gbh) {
      o.check(fdr_controlled(r, s.plan.alpha),
              "HeirGBH 1-pi0=" + g(r.density) + ": FDR " + fmt("%.4f", r.mean_fdp) +
                  " <= 0.05 + 2*" + fmt("%.4f", r.se_fdp));
    } else {
      o.note(std::string(method_name(r.method)) + " 1-pi0=" + g(r.density) + ": FDR " +
             fmt("%.4f", r.mean_fdp) + " (SE " + fmt("%.4f", r.se_fdp) + ")");
    }
  }
  return o;
}

// 8 -------------------------------------------------------------------------

Outcome calibration() {
  Outcome o;
  const SimulationPlan plan;
  Rng rng(derive_seed(kSeed, 8));
  const int draws = 4000;
  for (double d : {0.2, 0.4, 0.7, 1.0}) {
    std::vector<double> overlap(draws), outside(draws);
    for (int k = 0; k < draws; ++k) {
      const auto th = generate_theta(plan, d, rng);
      double in = 0.0, out = 0.0;
      for (std::size_t r = 0; r < plan.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < plan.cols; ++c) {
          s += th.theta.at(r, c);
        }
        const bool shared = r >= plan.overlap_first_row &&
                            r < plan.overlap_first_row + plan.overlap_rows;
        (shared ? in : out) += s;
      }
      overlap[k] = in / static_cast<double>(plan.overlap_rows * plan.cols);
      outside[k] = out / static_cast<double>((plan.rows - plan.overlap_rows) * plan.cols);
    }
    const auto check_block = [&](const std::vector<double>& xs, double expected,
                                 const char* name) {
      double mean = 0.0;
      for (double x : xs) {
        mean += x;
      }
      mean /= draws;
      double ss = 0.0;
      for (double x : xs) {
        ss += (x - mean) * (x - mean);
      }
      const double se = std::sqrt(ss / (draws - 1) / draws);
      o.check(std::abs(mean - expected) <= 3.0 * se,
              std::string(name) + " signal density at 1-pi0=" + g(d) + ": " + fmt("%.5f", mean) +
                  " vs " + fmt("%.5f", expected) + " (3 SE = " + fmt("%.5f", 3.0 * se) + ")");
    };
    check_block(overlap, d * (1.0 - plan.pi1_star) * (1.0 - plan.pi2), "overlap");
    check_block(outside, d * (1.0 - plan.pi1) * (1.0 - plan.pi2), "non-overlap");
  }

  double worst = 0.0;
  for (double r1 = 0.0; r1 < 1.0; r1 += 0.05) {
    for (double r2 = 0.0; r2 < 1.0; r2 += 0.05) {
      const auto c = noise_coefficients(r1, r2);
      const double sum = c.cell * c.cell + c.row * c.row + c.column * c.column + c.global * c.global;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  const auto paper = noise_coefficients(0.3, 0.4);
  const double paper_sum = paper.cell * paper.cell + paper.row * paper.row +
                           paper.column * paper.column + paper.global * paper.global;
  o.check(worst <= 4.0 * std::numeric_limits<double>::epsilon(),
          "squared noise coefficients sum to 1: worst |sum-1| over a 20x20 rho grid " + g(worst) +
              " (<= 4 eps), at (0.3, 0.4) " + fmt("%.17g", paper_sum));

  for (const auto& [r1, r2] : {std::pair{0.0, 0.0}, std::pair{0.3, 0.4}}) {
    // Nulls of one replicate at 1-pi0 = 0.3; under dependence the check is
    // marginal only, so pool nulls from one cell per replicate.
    std::vector<double> nulls;
    Rng prng(derive_seed(kSeed, 8, static_cast<std::uint64_t>(r1 * 10)));
    if (r1 == 0.0) {
      const auto th = generate_theta(plan, 0.3, prng);
      const auto p = pvalues_from_statistics(generate_statistics(th.theta, r1, r2, plan.mu, prng));
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (th.theta.values[i] == 0) {
          nulls.push_back(p[i]);
        }
      }
    } else {
      for (int k = 0; k < 3000; ++k) {
        const auto th = generate_theta(plan, 0.3, prng);
        const auto p =
            pvalues_from_statistics(generate_statistics(th.theta, r1, r2, plan.mu, prng));
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (th.theta.values[i] == 0) {
            nulls.push_back(p[i]);
            break;
          }
        }
      }
    }
    const double dist = oracle::ks_uniform_distance(nulls);
    const double pval = oracle::kolmogorov_tail(std::sqrt(static_cast<double>(nulls.size())) * dist);
    o.check(pval > 0.01, "null p-values uniform (rho " + g(r1) + "/" + g(r2) + ", n=" +
                             std::to_string(nulls.size()) + "): KS D=" + fmt("%.4f", dist) +
                             ", p=" + fmt("%.3f", pval));
  }
  return o;
}

// 9 -------------------------------------------------------------------------

Outcome worked_value() {
  Outcome o;
  std::vector<double> p;
  for (int i = 0; i < 19; ++i) {
    p.push_back(0.01 + 0.02 * i);
  }
  for (int i = 0; i < 6; ++i) {
    p.push_back(0.55 + 0.07 * i);
  }
  const auto w = adaptive_flat_weights(p, 0.5);
  bool all = true;
  for (double x : w) {
    all = all && x == 0.56;
  }
  o.check(all, "N=25, lambda=0.5, R=19: weight " + fmt("%.17g", w[0]) + " == 0.56");
  const auto flat = oracle_flat_weights(TruthAssignment{[] {
    std::vector<bool> v(25, false);
    std::fill_n(v.begin(), 15, true);
    return v;
  }()});
  o.note("oracle counterpart, 15 nulls of 25: " + fmt("%.17g", flat[0]));
  return o;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failed = 0;
  const auto report = [&failed](int id, const char* title, const std::function<Outcome()>& run) {
    const auto start = clock::now();
    const Outcome o = run();
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    std::printf("%s [%d] %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, secs);
    for (const auto& d : o.details) {
      std::printf("       %s\n", d.c_str());
    }
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  report(1, "null inverse weights sum to N on random configurations", condition_one);
  report(2, "reduction identities and hand examples", reductions);
  report(3, "step-up equals the quadratic rule", step_up);
  report(4, "leave-one-out bound and monotonicity of adaptive weights", proof_mechanics);

  SimulationPlan plan;
  plan.threads = 1;
  SimulationSummary independent;
  report(5, "FDR control, independent simulation (N=5000, 500 replicates)", [&] {
    independent = run_study(plan);
    return fdr_control(independent);
  });
  report(6, "power ordering HeirGBH >= BH and DAHeirGBH >= AdaptiveBH",
         [&] { return power_ordering(independent); });
  report(7, "FDR control of HeirGBH under dependence (rho 0.3 / 0.4)", [&] {
    SimulationPlan dep = plan;
    dep.rho_l1 = 0.3;
    dep.rho_l2 = 0.4;
    return dependence(run_study(dep));
  });
  report(8, "generator calibration", calibration);
  report(9, "adaptive flat worked value", worked_value);

  std::printf("%d of 9 criteria failed\n", failed);
  return failed;
}
