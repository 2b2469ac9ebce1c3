#include "gbh/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "gbh/testing.hpp"

namespace gbh {

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::bh: return "BH";
    case Method::adaptive_bh: return "AdaptiveBH";
    case Method::heir_gbh: return "HeirGBH";
    case Method::daheir_gbh: return "DAHeirGBH";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : all_methods()) {
    if (name == method_name(m)) {
      return m;
    }
  }
  return std::nullopt;
}

std::vector<Method> all_methods() {
  return {Method::bh, Method::adaptive_bh, Method::heir_gbh, Method::daheir_gbh};
}

std::vector<double> default_density_grid(std::size_t points) {
  if (points < 2) {
    return {0.0};
  }
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return grid;
}

void validate_plan(const SimulationPlan& plan) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("simulation plan: " + msg); };
  auto probability = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(std::string(name) + " must lie in [0, 1]");
    }
  };
  if (plan.rows == 0 || plan.cols == 0) {
    fail("grid must have at least one row and one column");
  }
  if (plan.overlap_first_row == 0 || plan.overlap_first_row + plan.overlap_rows >= plan.rows) {
    fail("overlap block must leave rows for both level-1 groups");
  }
  if (plan.density_grid.empty()) {
    fail("density grid is empty");
  }
  for (double d : plan.density_grid) {
    probability(d, "every 1 - pi0 grid value");
  }
  probability(plan.pi1, "pi1");
  probability(plan.pi1_star, "pi1*");
  probability(plan.pi2, "pi2");
  if (plan.pi1_star > plan.pi1) {
    fail("pi1* must not exceed pi1");
  }
  for (double rho : {plan.rho_l1, plan.rho_l2}) {
    if (!(rho >= 0.0 && rho < 1.0)) {
      fail("correlations must lie in [0, 1)");
    }
  }
  if (plan.lambda_grid.empty()) {
    fail("lambda grid is empty");
  }
  for (double lambda : plan.lambda_grid) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      fail("lambda must lie in (0, 1)");
    }
  }
  if (!(plan.alpha > 0.0 && plan.alpha < 1.0)) {
    fail("alpha must lie in (0, 1)");
  }
  if (plan.replicates == 0) {
    fail("replicates must be positive");
  }
  if (plan.methods.empty()) {
    fail("no methods selected");
  }
  if (!std::isfinite(plan.mu)) {
    fail("mu must be finite");
  }
  if (plan.threads == 0) {
    fail("threads must be positive");
  }
}

LayeredTheta generate_theta(const SimulationPlan& plan, double density, Rng& rng) {
  const std::size_t m = plan.rows;
  const std::size_t n = plan.cols;
  LayeredTheta out;
  out.theta0 = {m, n, std::vector<std::uint8_t>(m * n)};
  out.theta1 = {m, n, std::vector<std::uint8_t>(m * n)};
  out.theta = {m, n, std::vector<std::uint8_t>(m * n)};
  out.theta2.resize(m);

  std::bernoulli_distribution cell(density);
  for (auto& v : out.theta0.values) {
    v = cell(rng) ? 1 : 0;
  }

  std::bernoulli_distribution group(1.0 - plan.pi1);
  std::bernoulli_distribution shared(1.0 - plan.pi1_star);
  const std::uint8_t first = group(rng) ? 1 : 0;
  const std::uint8_t middle = shared(rng) ? 1 : 0;
  const std::uint8_t last = group(rng) ? 1 : 0;
  const std::size_t middle_end = plan.overlap_first_row + plan.overlap_rows;
  for (std::size_t r = 0; r < m; ++r) {
    const std::uint8_t v = r < plan.overlap_first_row ? first : (r < middle_end ? middle : last);
    std::fill_n(out.theta1.values.begin() + static_cast<std::ptrdiff_t>(r * n), n, v);
  }

  std::bernoulli_distribution row(1.0 - plan.pi2);
  for (auto& v : out.theta2) {
    v = row(rng) ? 1 : 0;
  }

  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      out.theta.at(r, c) = out.theta0.at(r, c) & out.theta1.at(r, c) & out.theta2[r];
    }
  }
  return out;
}

NoiseCoefficients noise_coefficients(double rho_l1, double rho_l2) noexcept {
  return {std::sqrt((1.0 - rho_l1) * (1.0 - rho_l2)), std::sqrt((1.0 - rho_l1) * rho_l2),
          std::sqrt(rho_l1 * (1.0 - rho_l2)), std::sqrt(rho_l1 * rho_l2)};
}

Grid<double> generate_statistics(const Grid<std::uint8_t>& theta, double rho_l1, double rho_l2,
                                 double mu, Rng& rng) {
  const std::size_t m = theta.rows;
  const std::size_t n = theta.cols;
  const auto coef = noise_coefficients(rho_l1, rho_l2);
  std::normal_distribution<double> z;

  Grid<double> x{m, n, std::vector<double>(m * n)};
  for (auto& v : x.values) {
    v = coef.cell * z(rng);
  }
  std::vector<double> z_row(m);
  std::vector<double> z_col(n);
  for (auto& v : z_row) {
    v = z(rng);
  }
  for (auto& v : z_col) {
    v = z(rng);
  }
  const double z0 = z(rng);

  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      x.at(r, c) += mu * static_cast<double>(theta.at(r, c)) + coef.row * z_row[r] +
                    coef.column * z_col[c] + coef.global * z0;
    }
  }
  return x;
}

std::vector<double> pvalues_from_statistics(const Grid<double>& x) {
  std::vector<double> p(x.values.size());
  std::transform(x.values.begin(), x.values.end(), p.begin(), normal_upper_tail);
  return p;
}

HierTree simulation_tree(const SimulationPlan& plan) {
  const std::size_t n = plan.cols;
  auto row_group = [n](std::size_t r) {
    GroupNode g;
    g.members = index_range(r * n, (r + 1) * n);
    return g;
  };
  auto block = [&](std::size_t first_row, std::size_t last_row) {
    GroupNode g;
    g.members = index_range(first_row * n, last_row * n);
    for (std::size_t r = first_row; r < last_row; ++r) {
      g.children.push_back(row_group(r));
    }
    return g;
  };

  GroupNode root;
  root.members = index_range(0, plan.rows * n);
  root.children.push_back(block(0, plan.overlap_first_row + plan.overlap_rows));
  root.children.push_back(block(plan.overlap_first_row, plan.rows));
  return HierTree(std::move(root));
}

ClassificationForest paired_region_forest(std::size_t electrodes, std::size_t regions,
                                          std::size_t time_points) {
  if (electrodes == 0 || regions == 0 || time_points == 0 || regions > electrodes) {
    throw std::invalid_argument("paired_region_forest: need 1 <= regions <= electrodes");
  }
  // Region k covers electrodes [start_k, start_k + size_k); neighbours share
  // exactly one electrode, so the sizes add up to electrodes + regions - 1.
  const std::size_t slots = electrodes + regions - 1;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  for (std::size_t k = 0; k < regions; ++k) {
    const std::size_t size = slots / regions + (k < slots % regions ? 1 : 0);
    spans.emplace_back(start, start + size);
    start += size - 1;
  }

  const std::size_t e = electrodes;
  const std::size_t t = time_points;
  ClassificationForest forest;
  forest.n = e * e * t;

  for (std::size_t criterion = 0; criterion < 2; ++criterion) {
    auto electrode_members = [&](std::size_t electrode) {
      if (criterion == 0) {
        return index_range(electrode * e * t, (electrode + 1) * e * t);
      }
      std::vector<HypothesisIndex> out;
      out.reserve(e * t);
      for (std::size_t a = 0; a < e; ++a) {
        const std::size_t base = (a * e + electrode) * t;
        for (std::size_t k = 0; k < t; ++k) {
          out.push_back(base + k);
        }
      }
      return out;
    };

    GroupNode root;
    root.members = index_range(0, forest.n);
    for (const auto& [first, last] : spans) {
      GroupNode region;
      for (std::size_t electrode = first; electrode < last; ++electrode) {
        GroupNode leaf;
        leaf.members = electrode_members(electrode);
        region.members.insert(region.members.end(), leaf.members.begin(), leaf.members.end());
        region.children.push_back(std::move(leaf));
      }
      root.children.push_back(std::move(region));
    }
    forest.trees.emplace_back(std::move(root));
  }
  return forest;
}

namespace {

WeightVector method_weights(Method method, const HierTree& tree, std::span<const double> p,
                            const TruthAssignment& truth, double lambda,
                            AncestorEstimate ancestors) {
  switch (method) {
    case Method::bh: return oracle_flat_weights(truth);
    case Method::adaptive_bh: return adaptive_flat_weights(p, lambda);
    case Method::heir_gbh: return oracle_hier_weights(tree, truth);
    case Method::daheir_gbh: return da_hier_weights(tree, p, lambda, ancestors);
  }
  throw std::logic_error("unhandled method");
}

bool depends_on_lambda(Method method) {
  return method == Method::adaptive_bh || method == Method::daheir_gbh;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

ReplicateResult run_replicate(const SimulationPlan& plan, const HierTree& tree,
                              std::size_t density_index, std::size_t replicate) {
  Rng rng(derive_seed(plan.seed, density_index, replicate));
  const auto theta = generate_theta(plan, plan.density_grid.at(density_index), rng);
  const auto x = generate_statistics(theta.theta, plan.rho_l1, plan.rho_l2, plan.mu, rng);
  const auto p = pvalues_from_statistics(x);

  TruthAssignment truth;
  truth.is_null.resize(theta.theta.values.size());
  for (std::size_t i = 0; i < truth.is_null.size(); ++i) {
    truth.is_null[i] = theta.theta.values[i] == 0;
  }

  const std::size_t methods = plan.methods.size();
  ReplicateResult out;
  out.fdp.resize(plan.lambda_grid.size() * methods);
  out.power.resize(out.fdp.size());
  for (std::size_t l = 0; l < plan.lambda_grid.size(); ++l) {
    for (std::size_t k = 0; k < methods; ++k) {
      const Method method = plan.methods[k];
      const std::size_t slot = l * methods + k;
      if (l > 0 && !depends_on_lambda(method)) {
        out.fdp[slot] = out.fdp[k];
        out.power[slot] = out.power[k];
        continue;
      }
      const auto w = method_weights(method, tree, p, truth, plan.lambda_grid[l], plan.ancestors);
      const auto metrics = outcome_metrics(weighted_bh(p, w, plan.alpha), truth);
      out.fdp[slot] = metrics.fdp;
      out.power[slot] = metrics.power;
    }
  }
  return out;
}

SimulationSummary run_study(const SimulationPlan& plan) {
  validate_plan(plan);
  const HierTree tree = simulation_tree(plan);
  const std::size_t densities = plan.density_grid.size();
  const std::size_t reps = plan.replicates;
  const std::size_t tasks = densities * reps;

  std::vector<ReplicateResult> results(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      results[task] = run_replicate(plan, tree, task / reps, task % reps);
    }
  };
  const unsigned workers = std::min<std::size_t>(plan.threads, tasks);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
  }

  auto mean_se = [reps](const std::vector<double>& xs) {
    CompensatedSum sum;
    for (double x : xs) {
      sum += x;
    }
    const double mean = sum.value() / static_cast<double>(reps);
    if (reps < 2) {
      return std::pair{mean, 0.0};
    }
    CompensatedSum sq;
    for (double x : xs) {
      sq += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(sq.value() / static_cast<double>(reps - 1));
    return std::pair{mean, sd / std::sqrt(static_cast<double>(reps))};
  };

  SimulationSummary summary;
  summary.plan = plan;
  const std::size_t methods = plan.methods.size();
  std::vector<double> fdp(reps);
  std::vector<double> power(reps);
  for (std::size_t l = 0; l < plan.lambda_grid.size(); ++l) {
    for (std::size_t d = 0; d < densities; ++d) {
      for (std::size_t k = 0; k < methods; ++k) {
        const std::size_t slot = l * methods + k;
        for (std::size_t r = 0; r < reps; ++r) {
          fdp[r] = results[d * reps + r].fdp[slot];
          power[r] = results[d * reps + r].power[slot];
        }
        SummaryRow row;
        row.method = plan.methods[k];
        row.density = plan.density_grid[d];
        row.lambda = plan.lambda_grid[l];
        std::tie(row.mean_fdp, row.se_fdp) = mean_se(fdp);
        std::tie(row.mean_power, row.se_power) = mean_se(power);
        row.replicates = reps;
        summary.rows.push_back(row);
      }
    }
  }
  return summary;
}

void write_summary_csv(const SimulationSummary& summary, std::ostream& os) {
  const auto& plan = summary.plan;
  os << "# gbh simulate: rows=" << plan.rows << " cols=" << plan.cols
     << " overlap_first_row=" << plan.overlap_first_row << " overlap_rows=" << plan.overlap_rows
     << '\n';
  os << "# mu=" << format_number(plan.mu) << " pi1=" << format_number(plan.pi1)
     << " pi1_star=" << format_number(plan.pi1_star) << " pi2=" << format_number(plan.pi2)
     << " ancestors=" << (plan.ancestors == AncestorEstimate::direct ? "direct" : "multiplicative")
     << '\n';
  os << "method,one_minus_pi0,mean_fdp,se_fdp,mean_power,se_power,replicates,rho_L1,rho_L2,"
        "lambda,alpha,seed\n";
  for (const auto& row : summary.rows) {
    os << method_name(row.method) << ',' << format_number(row.density) << ','
       << format_number(row.mean_fdp) << ',' << format_number(row.se_fdp) << ','
       << format_number(row.mean_power) << ',' << format_number(row.se_power) << ','
       << row.replicates << ',' << format_number(plan.rho_l1) << ','
       << format_number(plan.rho_l2) << ',' << format_number(row.lambda) << ','
       << format_number(plan.alpha) << ',' << plan.seed << '\n';
  }
}

}  // namespace gbh
