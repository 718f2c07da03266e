// Command-line front end: sweeps, single-cell runs, the budget-allocation
// demo, and a quick self-test of the numeric oracles.

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "retsim/coding.hpp"
#include "retsim/config.hpp"
#include "retsim/gaussian.hpp"
#include "retsim/sweep.hpp"

namespace {

using namespace retsim;

int env_workers_override(int fallback) {
  const char* env = std::getenv("RETSIM_WORKERS");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
    throw std::invalid_argument(
        std::string("RETSIM_WORKERS: expected a positive integer, got '") +
        env + "'");
  return static_cast<int>(v);
}

template <typename T>
T pick_first(const std::vector<T>& grid, const CLI::Option* opt, T flag_value,
             const char* name) {
  if (opt && opt->count() > 0) return flag_value;
  if (grid.size() > 1)
    std::cerr << "note: config lists " << grid.size() << " values for " << name
              << "; using the first\n";
  return grid.front();
}

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 1;
  int trials = 0;
  std::string format;
  CLI::Option *o_config = nullptr, *o_out = nullptr, *o_seed = nullptr,
              *o_workers = nullptr, *o_trials = nullptr, *o_format = nullptr;

  void attach(CLI::App* cmd, bool with_sweep_flags) {
    o_config = cmd->add_option("--config", config_path,
                               "Configuration file (flat key = value)");
    o_out = cmd->add_option("--out", out, "Output path");
    o_seed = cmd->add_option("--seed", seed, "Base seed (overrides config)");
    o_trials =
        cmd->add_option("--trials", trials, "Monte Carlo trials per cell");
    if (with_sweep_flags) {
      o_workers = cmd->add_option("--workers", workers, "Worker threads");
      o_format = cmd->add_option("--format", format,
                                 "Output format: csv, json, or both");
    }
  }

  SweepSpec load() const {
    SweepSpec spec = config_path.empty() ? SweepSpec{}
                                         : parse_sweep_file(config_path);
    if (o_out->count()) spec.out = out;
    if (o_seed->count()) spec.base.seed = seed;
    if (o_trials->count()) spec.base.trials = trials;
    if (o_workers && o_workers->count())
      spec.workers = workers;
    else
      spec.workers = env_workers_override(spec.workers);
    if (o_format && o_format->count()) spec.format = format;
    return spec;
  }
};

struct CellFlags {
  double epsilon = 0.5, R = 1.0;
  int L_q = 100, n = 10, Q = 0;
  CLI::Option *o_eps = nullptr, *o_R = nullptr, *o_Lq = nullptr,
              *o_n = nullptr, *o_Q = nullptr;

  void attach(CLI::App* cmd) {
    o_eps = cmd->add_option("--epsilon", epsilon, "Erasure probability");
    o_Lq = cmd->add_option("--L-q", L_q, "Query length in tokens");
    o_R = cmd->add_option("--R", R, "Design rate");
    o_n = cmd->add_option("--n", n, "Corpus size");
    o_Q = cmd->add_option("--Q", Q, "Queries averaged for the bounds");
  }

  // Single-cell commands collapse any grids to one value per axis.
  ExperimentConfig resolve(const SweepSpec& spec, double* eps_out) const {
    ExperimentConfig cfg = spec.base;
    const double eps =
        pick_first(spec.epsilons, o_eps, epsilon, "epsilon");
    cfg.epsilons = {eps};
    cfg.L_q = pick_first(spec.L_qs, o_Lq, L_q, "L_q");
    cfg.R = pick_first(spec.Rs, o_R, R, "R");
    cfg.n = pick_first(spec.ns, o_n, n, "n");
    if (o_Q->count()) cfg.Q = Q;
    cfg.validate();
    *eps_out = eps;
    return cfg;
  }
};

std::string json_output_path(const std::string& csv_path) {
  const std::size_t dot = csv_path.rfind('.');
  const std::size_t slash = csv_path.rfind('/');
  if (dot != std::string::npos &&
      (slash == std::string::npos || dot > slash))
    return csv_path.substr(0, dot) + ".json";
  return csv_path + ".json";
}

int cmd_sweep(const CommonFlags& common) {
  SweepSpec spec = common.load();
  spec.validate();
  if (spec.out.empty() && spec.format == "both")
    throw std::invalid_argument(
        "config: key 'out' is required when format = both");

  const std::string resume =
      (!spec.out.empty() && spec.format != "json") ? spec.out : "";
  const SweepResult result = run_sweep(spec, resume, &std::cerr);

  const std::string csv = sweep_csv(result);
  if (spec.out.empty()) {
    std::cout << (spec.format == "json" ? sweep_json(result) : csv);
  } else if (spec.format == "json") {
    write_text_file(spec.out, sweep_json(result));
  } else {
    write_text_file(spec.out, csv);
    if (spec.format == "both")
      write_text_file(json_output_path(spec.out), sweep_json(result));
  }

  std::cerr << "sweep: " << result.rows.size() << " cells ("
            << result.computed << " computed, " << result.reused
            << " reused)";
  if (!spec.out.empty()) std::cerr << " -> " << spec.out;
  std::cerr << "\n";
  return 0;
}

int cmd_simulate(const CommonFlags& common, const CellFlags& cellf) {
  const SweepSpec spec = common.load();
  double eps = 0.0;
  const ExperimentConfig cfg = cellf.resolve(spec, &eps);
  const Workspace ws = prepare_workspace(cfg);
  const CellResult cell =
      run_cell(cfg, ws, eps, /*with_mc=*/true, /*with_bounds=*/false);
  std::printf("epsilon=%g L_q=%d R=%g n=%d trials=%d\n", eps, cfg.L_q, cfg.R,
              cfg.n, cfg.trials);
  std::printf("pe_mc=%.6g  ci95=[%.6g, %.6g]  resampled=%" PRIu64 "\n",
              cell.pe_mc, cell.ci_lo, cell.ci_hi, cell.resampled);
  if (!spec.out.empty())
    write_text_file(spec.out,
                    cell_csv_header() + "\n" + cell_csv_row(cell) + "\n");
  return 0;
}

int cmd_bounds(const CommonFlags& common, const CellFlags& cellf) {
  const SweepSpec spec = common.load();
  double eps = 0.0;
  const ExperimentConfig cfg = cellf.resolve(spec, &eps);
  if (cfg.mode != SimMode::kTfidf)
    throw std::invalid_argument(
        "bounds: analytic bounds exist only in tfidf mode");
  const Workspace ws = prepare_workspace(cfg);
  const AveragedBounds ab = averaged_bounds(cfg, ws, eps, cfg.Q);
  std::printf("epsilon=%g L_q=%d R=%g n=%d Q=%d\n", eps, cfg.L_q, cfg.R,
              cfg.n, ab.Q);
  std::printf("pe_mvn = %.6g  (se %.2g)\n", ab.pe_mvn, ab.se_pe_mvn);
  std::printf("b1     = %.6g  (se %.2g)  clipped %.6g\n", ab.b1, ab.se_b1,
              ab.b1_clipped);
  std::printf("b3     = %.6g  (se %.2g)\n", ab.b3, ab.se_b3);
  std::printf("sidak  = %.6g  (se %.2g)  valid_frac %.3g\n", ab.sidak,
              ab.se_sidak, ab.sidak_valid_frac);
  std::printf("combined = %.6g  resampled = %" PRIu64 "\n", ab.combined,
              ab.resampled);
  if (!spec.out.empty()) {
    CellResult cell = run_cell(cfg, ws, eps, /*with_mc=*/false,
                               /*with_bounds=*/true);
    write_text_file(spec.out,
                    cell_csv_header() + "\n" + cell_csv_row(cell) + "\n");
  }
  return 0;
}

std::vector<double> read_scores_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("dp-demo: cannot open scores file '" + path +
                                "'");
  std::vector<double> scores;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (tok[0] == '#') break;  // rest of line is a comment
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        std::ostringstream os;
        os << path << ":" << lineno << ": not a number: '" << tok << "'";
        throw std::invalid_argument(os.str());
      }
      scores.push_back(x);
    }
  }
  if (scores.empty())
    throw std::invalid_argument("dp-demo: scores file '" + path +
                                "' contains no values");
  return scores;
}

// Number of compositions of B over L slots, saturating; gates the oracle.
double composition_count(int L, int B) {
  double c = 1.0;
  for (int i = 1; i < L; ++i) c *= static_cast<double>(B + i) / i;
  return c;
}

int cmd_dp_demo(const std::string& scores_path, int B, double epsilon) {
  const std::vector<double> scores = read_scores_file(scores_path);
  const TokenBudgetAllocation alloc =
      dp_budget_allocation(scores, B, epsilon);
  std::printf("L=%zu B=%d epsilon=%g\n", scores.size(), B, epsilon);
  std::printf("r = [");
  for (std::size_t i = 0; i < alloc.r.size(); ++i)
    std::printf(i ? ", %d" : "%d", alloc.r[i]);
  std::printf("]\n");
  std::printf("objective = %.10g\n", alloc.objective);
  if (composition_count(static_cast<int>(scores.size()), B) <= 2e5) {
    const TokenBudgetAllocation oracle =
        exhaustive_budget_allocation(scores, B, epsilon);
    const bool match =
        oracle.r == alloc.r && oracle.objective == alloc.objective;
    std::printf("oracle (exhaustive): %s\n", match ? "match" : "MISMATCH");
    if (!match) {
      std::printf("oracle r = [");
      for (std::size_t i = 0; i < oracle.r.size(); ++i)
        std::printf(i ? ", %d" : "%d", oracle.r[i]);
      std::printf("], objective = %.10g\n", oracle.objective);
      return 2;
    }
  } else {
    std::printf("oracle (exhaustive): skipped, instance too large\n");
  }
  return 0;
}

int cmd_selftest() {
  int failed = 0, total = 0;
  auto check = [&](const char* name, bool ok) {
    ++total;
    if (!ok) ++failed;
    std::printf("%-44s %s\n", name, ok ? "ok" : "FAIL");
  };

  namespace g = retsim::gaussian;
  check("normal cdf at 0 is 1/2", std::fabs(g::std_normal_cdf(0.0) - 0.5) < 1e-15);
  check("quantile inverts cdf",
        std::fabs(g::std_normal_quantile(g::std_normal_cdf(1.2345)) - 1.2345) <
            1e-9);
  {
    Eigen::Vector2d mu = Eigen::Vector2d::Zero();
    Eigen::Matrix2d s;
    s << 1.0, 0.5, 0.5, 1.0;
    check("bivariate orthant 1/3 at rho=1/2",
          std::fabs(g::bivariate_cdf_at_zero(mu, s) - 1.0 / 3.0) < 1e-6);
  }
  {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
    check("trivariate orthant 1/8 independent",
          std::fabs(g::trivariate_cdf_at_zero(mu, s) - 0.125) < 1e-5);
  }
  {
    const int m = 5;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(m, m);
    g::QmcConfig qc;
    qc.target_se = 5e-5;
    const g::OrthantEstimate est = g::mvn_cdf_at_zero(mu, s, qc);
    check("5-dim orthant 1/32 independent",
          std::fabs(est.value - 1.0 / 32.0) <
              3.0 * est.uncertainty() + 1e-12);
  }
  {
    const std::vector<double> scores{0.9, 0.1};
    const auto dp = dp_budget_allocation(scores, 3, 0.5);
    const auto ex = exhaustive_budget_allocation(scores, 3, 0.5);
    check("budget DP matches exhaustive oracle",
          dp.r == ex.r && dp.objective == ex.objective &&
              std::fabs(dp.objective - 0.7875) < 1e-12);
  }
  check("round(L_q/R) banker's rounding",
        budget_from_rate(10, 4.0) == 2 && budget_from_rate(30, 4.0) == 8);
  {
    const auto [lo, hi] = wilson_interval(0, 2000);
    check("wilson interval at zero successes",
          lo == 0.0 && hi > 0.0 && hi < 4.0 / 2000.0);
  }
  std::printf("selftest: %d/%d checks passed\n", total - failed, total);
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TF-IDF retrieval over an erasure channel: Monte Carlo "
               "simulation, Gaussian error bounds, and budget allocation"};
  app.require_subcommand(1);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run the full epsilon x L_q x R x n grid (resumable)");
  CommonFlags sweep_flags;
  sweep_flags.attach(sweep, /*with_sweep_flags=*/true);

  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo error rate for one cell");
  CommonFlags sim_flags;
  CellFlags sim_cell;
  sim_flags.attach(simulate, false);
  sim_cell.attach(simulate);

  CLI::App* bounds = app.add_subcommand(
      "bounds", "Query-averaged analytic bounds for one cell");
  CommonFlags bounds_flags;
  CellFlags bounds_cell;
  bounds_flags.attach(bounds, false);
  bounds_cell.attach(bounds);

  CLI::App* dp = app.add_subcommand(
      "dp-demo", "Budget allocation for a scores file, with oracle check");
  std::string scores_path;
  int dp_B = 0;
  double dp_eps = 0.5;
  dp->add_option("--scores", scores_path, "Whitespace-separated scores file")
      ->required();
  dp->add_option("--B", dp_B, "Total copy budget")->required();
  dp->add_option("--epsilon", dp_eps, "Erasure probability");

  CLI::App* selftest =
      app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // help/version exit cleanly; bad flags -> 1
  }

  try {
    if (sweep->parsed()) return cmd_sweep(sweep_flags);
    if (simulate->parsed()) return cmd_simulate(sim_flags, sim_cell);
    if (bounds->parsed()) return cmd_bounds(bounds_flags, bounds_cell);
    if (dp->parsed()) return cmd_dp_demo(scores_path, dp_B, dp_eps);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
