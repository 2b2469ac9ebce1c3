#ifndef GBH_SIMULATE_HPP
#define GBH_SIMULATE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gbh/classification.hpp"
#include "gbh/numeric.hpp"
#include "gbh/weights.hpp"

namespace gbh {

enum class Method {
  bh,           // oracle BH, W_i = pi0
  adaptive_bh,  // Storey-weighted BH
  heir_gbh,     // oracle hierarchical weights
  daheir_gbh,   // data-adaptive hierarchical weights
};

std::string_view method_name(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;
std::vector<Method> all_methods();

/// Evenly spaced values 0, 1/(points-1), ..., 1.
std::vector<double> default_density_grid(std::size_t points = 11);

/// Parameters of the layered-signal Monte Carlo study on an m x n grid.
///
/// Rows [0, overlap_first_row) form the first-only block, the next
/// `overlap_rows` rows the block shared by both level-1 groups, and the
/// remaining rows the second-only block. Each row is one level-2 group.
struct SimulationPlan {
  std::size_t rows = 50;
  std::size_t cols = 100;
  std::size_t overlap_first_row = 25;
  std::size_t overlap_rows = 5;
  double mu = 3.0;
  std::vector<double> density_grid = default_density_grid();  // values of 1 - pi0
  double pi1 = 0.5;
  double pi1_star = 0.25;
  double pi2 = 0.5;
  double rho_l1 = 0.0;
  double rho_l2 = 0.0;
  std::vector<double> lambda_grid{0.5};
  double alpha = 0.05;
  std::size_t replicates = 500;
  std::uint64_t seed = 20240607;
  std::vector<Method> methods = all_methods();
  AncestorEstimate ancestors = AncestorEstimate::direct;
  unsigned threads = 1;
};

/// Throws std::invalid_argument describing the first invalid field.
void validate_plan(const SimulationPlan& plan);

/// Row-major m x n matrix.
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  [[nodiscard]] T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  [[nodiscard]] const T& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct LayeredTheta {
  Grid<std::uint8_t> theta0;       // per-cell Ber(1 - pi0)
  Grid<std::uint8_t> theta1;       // per-block Ber(1 - pi1) / Ber(1 - pi1*), broadcast
  std::vector<std::uint8_t> theta2;  // per-row Ber(1 - pi2)
  Grid<std::uint8_t> theta;        // entrywise product
};

/// Draws all three signal layers for density 1 - pi0 = `density`.
LayeredTheta generate_theta(const SimulationPlan& plan, double density, Rng& rng);

/// The four coefficients of the Kronecker-correlated noise, in the order
/// (cell, row, column, global). Their squares sum to 1.
struct NoiseCoefficients {
  double cell;
  double row;
  double column;
  double global;
};
NoiseCoefficients noise_coefficients(double rho_l1, double rho_l2) noexcept;

/// X = mu Theta + cell Z_mn + row Z_m 1' + column 1 Z_n' + global Z0 1 1'.
/// Draw order: Z_mn (row-major), Z_m, Z_n, Z0.
Grid<double> generate_statistics(const Grid<std::uint8_t>& theta, double rho_l1, double rho_l2,
                                 double mu, Rng& rng);

/// One-sided p-values 1 - Phi(x), row-major.
std::vector<double> pvalues_from_statistics(const Grid<double>& x);

/// Two-level tree over rows * cols hypotheses (index = row * cols + col):
/// two overlapping level-1 groups and one level-2 group per row; shared
/// rows sit under both level-1 groups.
HierTree simulation_tree(const SimulationPlan& plan);

/// Synthetic two-criterion forest shaped like a paired-electrode study:
/// N = electrodes^2 * time_points hypotheses indexed
/// ((a * electrodes) + b) * time_points + t. Tree s groups hypotheses by the
/// s-th electrode (a or b) at level 2 and by region at level 1. Regions are
/// a chain; consecutive regions share one boundary electrode.
ClassificationForest paired_region_forest(std::size_t electrodes = 61, std::size_t regions = 6,
                                          std::size_t time_points = 256);

struct SummaryRow {
  Method method{};
  double density = 0.0;  // 1 - pi0
  double lambda = 0.5;
  double mean_fdp = 0.0;
  double se_fdp = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  std::size_t replicates = 0;
};

struct SimulationSummary {
  SimulationPlan plan;
  std::vector<SummaryRow> rows;  // ordered by lambda, density, method
};

/// Per-replicate FDP and power for every (lambda, method) pair, in the
/// order lambda-major, method-minor.
struct ReplicateResult {
  std::vector<double> fdp;
  std::vector<double> power;
};

/// Runs one replicate at density index `density_index`. Its random stream
/// is derive_seed(plan.seed, density_index, replicate).
ReplicateResult run_replicate(const SimulationPlan& plan, const HierTree& tree,
                              std::size_t density_index, std::size_t replicate);

SimulationSummary run_study(const SimulationPlan& plan);

/// CSV with header
/// method,one_minus_pi0,mean_fdp,se_fdp,mean_power,se_power,replicates,rho_L1,rho_L2,lambda,alpha,seed
/// preceded by '#' lines echoing the remaining plan fields.
void write_summary_csv(const SimulationSummary& summary, std::ostream& os);

}  // namespace gbh

#endif  // GBH_SIMULATE_HPP
