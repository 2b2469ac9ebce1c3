#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gbh/classification_io.hpp"
#include "gbh/simulate.hpp"
#include "gbh/testing.hpp"
#include "gbh/validate.hpp"
#include "gbh/weights.hpp"
#include "io.hpp"

namespace gbh::cli {

namespace {

struct TestArgs {
  std::string method = "daheir-gbh";
  double alpha = 0.05;
  double lambda = 0.5;
  std::string spec;
  std::string pvalues;
  std::string truth;
  std::string out;
  std::string ancestors = "direct";
};

struct SimulateArgs {
  std::size_t replicates = 500;
  std::optional<double> rho_l1;
  std::optional<double> rho_l2;
  std::optional<std::size_t> grid;
  std::vector<double> lambda_grid;
  std::optional<double> lambda;
  double alpha = 0.05;
  std::uint64_t seed = 20240607;
  std::vector<std::string> methods;
  std::string ancestors = "direct";
  std::string preset;
  unsigned threads = 1;
  std::string out;
};

struct ValidateArgs {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double lambda = 0.5;
  double alpha = 0.05;
  std::size_t moves = 20;
  std::vector<std::string> identities;
  std::string out;
  bool corrupt = false;
};

struct GenerateArgs {
  std::string out;
  std::size_t rows = 50;
  std::size_t cols = 100;
  std::size_t electrodes = 61;
  std::size_t regions = 6;
  std::size_t time_points = 256;
  double density = 0.5;
  double rho_l1 = 0.0;
  double rho_l2 = 0.0;
  std::uint64_t seed = 20240607;
  std::string pvalues_out;
  std::string truth_out;
};

AncestorEstimate parse_ancestors(const std::string& s) {
  if (s == "direct") {
    return AncestorEstimate::direct;
  }
  if (s == "multiplicative") {
    return AncestorEstimate::multiplicative;
  }
  throw InputError("--ancestors must be direct or multiplicative");
}

const std::vector<std::string>& test_methods() {
  static const std::vector<std::string> names{"bh",       "oracle-bh",   "adaptive-bh",
                                              "heir-gbh", "daheir-gbh",  "sway-gbh",
                                              "da-sway-gbh", "gen-gbh",  "da-gen-gbh"};
  return names;
}

bool is_oracle(const std::string& m) {
  return m == "oracle-bh" || m == "heir-gbh" || m == "sway-gbh" || m == "gen-gbh";
}

bool is_adaptive(const std::string& m) {
  return m == "adaptive-bh" || m == "daheir-gbh" || m == "da-sway-gbh" || m == "da-gen-gbh";
}

bool needs_spec(const std::string& m) {
  return m != "bh" && m != "oracle-bh" && m != "adaptive-bh";
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) {
        throw InputError("cannot write " + path);
      }
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

WeightVector compute_weights(const TestArgs& a, const std::optional<ClassificationForest>& forest,
                             std::span<const double> p, const std::optional<TruthAssignment>& truth) {
  const auto& m = a.method;
  const AncestorEstimate anc = parse_ancestors(a.ancestors);
  const auto single_tree = [&]() -> const HierTree& {
    if (forest->trees.size() != 1) {
      throw InputError(m + " needs a classification with exactly one tree, got " +
                       std::to_string(forest->trees.size()));
    }
    return forest->trees[0];
  };
  const auto sway = [&]() {
    if (!is_sway_partition(*forest)) {
      throw InputError(m + " needs every tree to be a depth-1 partition");
    }
  };
  if (m == "bh") return WeightVector(p.size(), 1.0);
  if (m == "oracle-bh") return oracle_flat_weights(*truth);
  if (m == "adaptive-bh") return adaptive_flat_weights(p, a.lambda);
  if (m == "heir-gbh") return oracle_hier_weights(single_tree(), *truth);
  if (m == "daheir-gbh") return da_hier_weights(single_tree(), p, a.lambda, anc);
  if (m == "sway-gbh") {
    sway();
    return oracle_sway_weights(*forest, *truth);
  }
  if (m == "da-sway-gbh") {
    sway();
    return da_sway_weights(*forest, p, a.lambda);
  }
  if (m == "gen-gbh") return oracle_gen_weights(*forest, *truth);
  if (m == "da-gen-gbh") return da_gen_weights(*forest, p, a.lambda, anc);
  throw InputError("unknown method " + m);
}

int cmd_test(const TestArgs& a, std::ostream& out) {
  if (is_oracle(a.method) && a.truth.empty()) {
    throw InputError(a.method + " is an oracle method and needs --truth");
  }
  if (needs_spec(a.method) && a.spec.empty()) {
    throw InputError(a.method + " needs --spec");
  }
  if (is_adaptive(a.method) && !(a.lambda > 0.0 && a.lambda < 1.0)) {
    throw InputError("--lambda must lie in (0, 1)");
  }
  const std::vector<double> p = read_pvalues(a.pvalues);
  std::optional<TruthAssignment> truth;
  if (!a.truth.empty()) {
    truth = read_truth(a.truth);
    if (truth->size() != p.size()) {
      throw InputError("truth file has " + std::to_string(truth->size()) + " labels but there are " +
                       std::to_string(p.size()) + " p-values");
    }
  }
  std::optional<ClassificationForest> forest;
  if (!a.spec.empty()) {
    try {
      forest = read_forest_json(a.spec);
    } catch (const ClassificationFormatError& e) {
      throw InputError(a.spec + ": " + e.what());
    }
    if (forest->n != p.size()) {
      throw InputError("classification has N = " + std::to_string(forest->n) + " but there are " +
                       std::to_string(p.size()) + " p-values");
    }
  }

  const WeightVector w = compute_weights(a, forest, p, truth);
  const TestOutcome outcome = weighted_bh(p, w, a.alpha);

  Output o(a.out, out);
  std::ostream& os = o.stream();
  os << "# method=" << a.method << " alpha=" << format_double(a.alpha);
  if (is_adaptive(a.method)) {
    os << " lambda=" << format_double(a.lambda);
  }
  if (a.method == "daheir-gbh" || a.method == "da-gen-gbh") {
    os << " ancestors=" << a.ancestors;
  }
  os << " N=" << p.size() << '\n';
  os << "# rejections=" << outcome.threshold_index << " threshold_index=" << outcome.threshold_index
     << '\n';
  if (truth) {
    const OutcomeMetrics m = outcome_metrics(outcome, *truth);
    os << "# false_rejections=" << m.false_rejections << " fdp=" << format_double(m.fdp)
       << " power=" << format_double(m.power) << '\n';
  }
  os << "index,pvalue,weight,weighted_p,rejected\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << i << ',' << format_double(p[i]) << ',' << format_double(w[i]) << ','
       << format_double(outcome.weighted_p[i]) << ',' << (outcome.rejected[i] ? 1 : 0) << '\n';
  }
  return ok;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationPlan plan;
  if (a.preset == "prds") {
    plan.pi1 = plan.pi1_star = plan.pi2 = 0.0;
    plan.density_grid = {0.7};
    plan.rho_l1 = 0.3;
    plan.rho_l2 = 0.4;
    plan.lambda_grid = {0.01, 0.02, 0.03, 0.04};
  } else if (!a.preset.empty()) {
    throw InputError("unknown preset " + a.preset);
  }
  if (a.grid) {
    if (*a.grid < 2) {
      throw InputError("--grid needs at least 2 points");
    }
    plan.density_grid = default_density_grid(*a.grid);
  }
  plan.replicates = a.replicates;
  plan.rho_l1 = a.rho_l1.value_or(plan.rho_l1);
  plan.rho_l2 = a.rho_l2.value_or(plan.rho_l2);
  if (!a.lambda_grid.empty()) {
    plan.lambda_grid = a.lambda_grid;
  } else if (a.lambda) {
    plan.lambda_grid = {*a.lambda};
  }
  plan.alpha = a.alpha;
  plan.seed = a.seed;
  plan.threads = a.threads;
  plan.ancestors = parse_ancestors(a.ancestors);
  if (!a.methods.empty()) {
    plan.methods.clear();
    for (const auto& name : a.methods) {
      const auto m = parse_method(name);
      if (!m) {
        throw InputError("unknown simulation method " + name +
                         " (use BH, AdaptiveBH, HeirGBH, DAHeirGBH)");
      }
      plan.methods.push_back(*m);
    }
  }
  try {
    validate_plan(plan);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const SimulationSummary summary = run_study(plan);
  Output o(a.out, out);
  write_summary_csv(summary, o.stream());
  return ok;
}

bool selected(const std::string& identity, const std::vector<std::string>& filters) {
  if (filters.empty()) {
    return true;
  }
  return std::any_of(filters.begin(), filters.end(), [&](const std::string& f) {
    return identity == f || identity.rfind(f + ".", 0) == 0;
  });
}

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  SweepOptions o;
  o.trials = a.trials;
  o.seed = a.seed;
  o.lambda = a.lambda;
  o.alpha = a.alpha;
  o.monotone_moves = a.moves;
  o.corrupt = a.corrupt;
  if (!(a.lambda > 0.0 && a.lambda < 1.0)) {
    throw InputError("--lambda must lie in (0, 1)");
  }
  for (const auto& f : a.identities) {
    const auto names = sweep_identities();
    if (!std::any_of(names.begin(), names.end(), [&](const std::string& n) {
          return selected(n, {f});
        })) {
      throw InputError("unknown identity " + f);
    }
  }

  std::vector<IdentityReport> reports;
  for (auto& r : run_validation_sweep(o)) {
    if (selected(r.identity, a.identities)) {
      reports.push_back(std::move(r));
    }
  }
  if (!a.out.empty()) {
    Output file(a.out, out);
    write_report_jsonl(reports, file.stream());
  }

  struct Tally {
    std::size_t trials = 0;
    std::size_t passed = 0;
    double worst = 0.0;
    std::string first_failure;
  };
  std::map<std::string, Tally> tally;
  for (const auto& r : reports) {
    Tally& t = tally[r.identity];
    ++t.trials;
    t.passed += r.pass ? 1 : 0;
    const double excess = r.relation == Relation::equal ? std::abs(r.computed - r.target)
                                                        : r.computed - r.target;
    t.worst = std::max(t.worst, excess);
    if (!r.pass && t.first_failure.empty()) {
      t.first_failure = "trial " + std::to_string(r.trial) + " digest " + r.digest;
    }
  }
  bool all = true;
  for (const auto& name : sweep_identities()) {
    const auto it = tally.find(name);
    if (it == tally.end()) {
      continue;
    }
    const Tally& t = it->second;
    all = all && t.passed == t.trials;
    out << (t.passed == t.trials ? "PASS " : "FAIL ") << name << ' ' << t.passed << '/' << t.trials
        << " worst_excess=" << format_double(t.worst);
    if (!t.first_failure.empty()) {
      out << " first_failure=" << t.first_failure;
    }
    out << '\n';
  }
  out << (all ? "all identities hold\n" : "some identities failed\n");
  return all ? ok : validation_failure;
}

int cmd_generate_sim_tree(const GenerateArgs& a, std::ostream& out) {
  SimulationPlan plan;
  plan.rows = a.rows;
  plan.cols = a.cols;
  if (a.rows != 50) {
    plan.overlap_first_row = a.rows / 2;
    plan.overlap_rows = std::max<std::size_t>(1, a.rows / 10);
  }
  try {
    validate_plan(plan);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const ClassificationForest f{plan.rows * plan.cols, {simulation_tree(plan)}};
  Output o(a.out, out);
  o.stream() << forest_to_json(f);
  return ok;
}

int cmd_generate_eeg(const GenerateArgs& a, std::ostream& out) {
  ClassificationForest f;
  try {
    f = paired_region_forest(a.electrodes, a.regions, a.time_points);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  Output o(a.out, out);
  o.stream() << forest_to_json(f);
  return ok;
}

int cmd_generate_sim_data(const GenerateArgs& a, std::ostream&) {
  if (a.pvalues_out.empty() || a.truth_out.empty()) {
    throw InputError("sim-data needs --pvalues-out and --truth-out");
  }
  SimulationPlan plan;
  plan.rho_l1 = a.rho_l1;
  plan.rho_l2 = a.rho_l2;
  plan.density_grid = {a.density};
  plan.seed = a.seed;
  try {
    validate_plan(plan);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  Rng rng(derive_seed(plan.seed, 0, 0));
  const auto theta = generate_theta(plan, a.density, rng);
  const auto x = generate_statistics(theta.theta, plan.rho_l1, plan.rho_l2, plan.mu, rng);
  write_pvalues(pvalues_from_statistics(x), a.pvalues_out);
  TruthAssignment truth;
  for (auto v : theta.theta.values) {
    truth.is_null.push_back(v == 0);
  }
  write_truth(truth, a.truth_out);
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weighted BH testing for grouped hypotheses"};
  app.name("gbh");
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Run a weighted BH method on a p-value file");
  test->add_option("--method", ta.method, "Weighting method")
      ->check(CLI::IsMember(test_methods()))
      ->capture_default_str();
  test->add_option("--alpha", ta.alpha, "FDR level")->capture_default_str();
  test->add_option("--lambda", ta.lambda, "Storey threshold for adaptive methods")
      ->capture_default_str();
  test->add_option("--spec", ta.spec, "Classification JSON");
  test->add_option("--pvalues", ta.pvalues, "P-value file")->required();
  test->add_option("--truth", ta.truth, "Truth labels, 0 = null, 1 = signal");
  test->add_option("--out", ta.out, "Output CSV (default stdout)");
  test->add_option("--ancestors", ta.ancestors, "direct or multiplicative")->capture_default_str();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo FDR / power study");
  sim->add_option("--replicates", sa.replicates)->capture_default_str();
  sim->add_option("--rho-l1", sa.rho_l1, "Level-1 correlation (default 0)");
  sim->add_option("--rho-l2", sa.rho_l2, "Level-2 correlation (default 0)");
  sim->add_option("--grid", sa.grid, "Number of 1 - pi0 grid points on [0, 1] (default 11)");
  sim->add_option("--lambda", sa.lambda, "Single Storey threshold");
  sim->add_option("--lambda-grid", sa.lambda_grid, "Several Storey thresholds")->delimiter(',');
  sim->add_option("--alpha", sa.alpha)->capture_default_str();
  sim->add_option("--seed", sa.seed)->capture_default_str();
  sim->add_option("--methods", sa.methods, "Subset of BH,AdaptiveBH,HeirGBH,DAHeirGBH")
      ->delimiter(',');
  sim->add_option("--ancestors", sa.ancestors)->capture_default_str();
  sim->add_option("--preset", sa.preset, "prds: positive-dependence adaptive study");
  sim->add_option("--threads", sa.threads)->capture_default_str();
  sim->add_option("--out", sa.out, "Output CSV (default stdout)");

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "Randomized identity sweep");
  val->add_option("--trials", va.trials)->capture_default_str();
  val->add_option("--seed", va.seed)->capture_default_str();
  val->add_option("--lambda", va.lambda)->capture_default_str();
  val->add_option("--alpha", va.alpha)->capture_default_str();
  val->add_option("--moves", va.moves, "Monotonicity moves per trial")->capture_default_str();
  val->add_option("--identities", va.identities, "Identity names or prefixes")->delimiter(',');
  val->add_option("--out", va.out, "JSON-lines report");
  val->add_flag("--corrupt", va.corrupt)->group("");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Emit classification or data files");
  gen->require_subcommand(1);
  auto* gen_tree = gen->add_subcommand("sim-tree", "Simulation-study classification");
  gen_tree->add_option("--rows", ga.rows)->capture_default_str();
  gen_tree->add_option("--cols", ga.cols)->capture_default_str();
  gen_tree->add_option("--out", ga.out);
  auto* gen_eeg = gen->add_subcommand("eeg-forest", "Paired-electrode two-criterion forest");
  gen_eeg->add_option("--electrodes", ga.electrodes)->capture_default_str();
  gen_eeg->add_option("--regions", ga.regions)->capture_default_str();
  gen_eeg->add_option("--time-points", ga.time_points)->capture_default_str();
  gen_eeg->add_option("--out", ga.out);
  auto* gen_data = gen->add_subcommand("sim-data", "One simulated data set (p-values, truth)");
  gen_data->add_option("--density", ga.density, "1 - pi0")->capture_default_str();
  gen_data->add_option("--rho-l1", ga.rho_l1)->capture_default_str();
  gen_data->add_option("--rho-l2", ga.rho_l2)->capture_default_str();
  gen_data->add_option("--seed", ga.seed)->capture_default_str();
  gen_data->add_option("--pvalues-out", ga.pvalues_out);
  gen_data->add_option("--truth-out", ga.truth_out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "gbh: " << e.what() << '\n';
    return usage_error;
  }

  try {
    if (*test) return cmd_test(ta, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*val) return cmd_validate(va, out);
    if (*gen_tree) return cmd_generate_sim_tree(ga, out);
    if (*gen_eeg) return cmd_generate_eeg(ga, out);
    if (*gen_data) return cmd_generate_sim_data(ga, out);
  } catch (const InputError& e) {
    err << "gbh: " << e.what() << '\n';
    return usage_error;
  } catch (const std::invalid_argument& e) {
    err << "gbh: " << e.what() << '\n';
    return usage_error;
  }
  return usage_error;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run(args, out, err);
}

}  // namespace gbh::cli
