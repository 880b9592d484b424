#pragma once

// Command-line front end: option parsing (flags, flat key = value config
// file, environment fallback for the output directory) and the commands
// behind the `sparse_risk` executable.

#include "sparse_risk/experiments.hpp"
#include "sparse_risk/oracle.hpp"
#include "sparse_risk/risk.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace sparse_risk::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for --help; carries the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Setup, Sweep, Hodges, OracleCheck, LowerBound };

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitError = 2;
inline constexpr int kExitFailures = 3;

inline constexpr const char* kOutputEnv = "SPARSE_RISK_OUT";
inline constexpr const char* kDefaultOutputDir = "sparse_risk_out";

struct RunConfig {
  Command command = Command::Setup;
  SetupId setup_id = SetupId::I;
  std::uint64_t seed = 1;
  int replications = 500;
  std::vector<int> n_list = default_n_list();
  int gamma_points = 101;
  int threads = 1;
  int bootstrap_resamples = 200;
  std::string output_dir = kDefaultOutputDir;
  std::vector<std::string> estimators = {"ls", "scad2"};

  // sweep
  std::vector<double> theta0 = {3, 1.5, 0, 0, 2, 0, 0, 0};
  std::vector<double> eta = {0, 0, 1, 1, 0, 1, 1, 1};
  double gamma_max = 8.0;
  LambdaScale lambda_scale = LambdaScale::LogRatio;
  double rho = 0.5;
  std::string design_csv;

  // hodges
  double mu_max = 1.0;
  int mu_points = 401;

  // lower-bound
  std::vector<double> s = {0, 0, 5, 0, 0, 0, 0, 0};
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"setup", "run", "sweep", "hodges", "oracle-check", "lower-bound"};
  return names;
}

inline Command parse_command(const std::string& s) {
  if (s == "setup" || s == "run") return Command::Setup;
  if (s == "sweep") return Command::Sweep;
  if (s == "hodges") return Command::Hodges;
  if (s == "oracle-check") return Command::OracleCheck;
  if (s == "lower-bound") return Command::LowerBound;
  throw UsageError("unknown command '" + s + "'");
}

/// Parses `args` (without the program name). Precedence: flags, then the
/// --config file, then SPARSE_RISK_OUT (output directory only), then defaults.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig cfg;
  std::string command = "setup";
  std::string setup = "I";
  std::string scale = to_string(cfg.lambda_scale);
  std::string out_dir;

  CLI::App app{"Monte Carlo worst-case risk of sparse estimators", "sparse_risk"};
  app.set_config("--config", "", "flat key = value file; keys are long flag names");
  app.allow_config_extras(false);
  app.add_option("command", command, "setup (alias run) | sweep | hodges | oracle-check | lower-bound")
      ->check(CLI::IsMember(command_names()));
  app.add_option("--setup", setup, "setup id I..VI");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--reps", cfg.replications, "Monte Carlo replications")->check(CLI::PositiveNumber);
  app.add_option("--n-list,--n", cfg.n_list, "sample sizes, comma separated")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  app.add_option("--gamma-points", cfg.gamma_points, "points on the gamma grid")->check(CLI::Range(2, 100000));
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--bootstrap", cfg.bootstrap_resamples, "bootstrap resamples for mc_se")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "output directory (fallback: $SPARSE_RISK_OUT)");
  app.add_option("--estimators", cfg.estimators, "ls, scad2, scad2-cd, hard, bic")->delimiter(',');
  app.add_option("--theta0", cfg.theta0, "sweep: base parameter")->delimiter(',');
  app.add_option("--eta", cfg.eta, "sweep: direction")->delimiter(',');
  app.add_option("--gamma-max", cfg.gamma_max, "sweep: right end of the gamma grid")->check(CLI::NonNegativeNumber);
  app.add_option("--lambda-scale", scale, "sweep: log | pow10 | pow4 | unit")
      ->check(CLI::IsMember({"log", "pow10", "pow4", "unit"}));
  app.add_option("--rho", cfg.rho, "sweep: AR coefficient of the regressors");
  app.add_option("--design-csv", cfg.design_csv, "sweep: fixed design matrix (CSV, no header)");
  app.add_option("--mu-max", cfg.mu_max, "hodges: mu grid is [-mu_max, mu_max]")->check(CLI::PositiveNumber);
  app.add_option("--mu-points", cfg.mu_points, "hodges: points on the mu grid")->check(CLI::Range(1, 1000000));
  app.add_option("--s", cfg.s, "lower-bound: local direction s")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const bool n_given = app.count("--n-list") > 0;
  cfg.command = parse_command(command);
  try {
    cfg.setup_id = parse_setup_id(setup);
    cfg.lambda_scale = parse_lambda_scale(scale);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (cfg.command == Command::Hodges && !n_given) cfg.n_list = {100, 10000};

  if (!out_dir.empty()) {
    cfg.output_dir = out_dir;
  } else if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') {
    cfg.output_dir = env;
  }

  if (cfg.estimators.empty()) throw UsageError("--estimators: empty list");
  for (const auto& name : cfg.estimators) {
    try {
      parse_estimator_name(name, LambdaRule{});
    } catch (const InvalidParameter& e) {
      throw UsageError(e.what());
    }
  }
  if (cfg.command != Command::Hodges) {
    for (int n : cfg.n_list) {
      if (n <= static_cast<int>(cfg.theta0.size())) {
        throw UsageError("--n-list: sample sizes must exceed the number of regressors");
      }
    }
  }
  if (cfg.theta0.size() != cfg.eta.size()) throw UsageError("--theta0 and --eta differ in length");
  return cfg;
}

namespace detail {

// Four significant digits for terminal tables; CSV files keep full precision.
inline std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::filesystem::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  const auto probe = std::filesystem::path(dir) / ".sparse_risk_write_test";
  {
    std::ofstream f(probe);
    if (!f) throw std::runtime_error("output directory '" + dir + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
  return dir;
}

inline void write_report_file(const std::filesystem::path& path, const RiskReport& report) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  write_report_csv(f, report);
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline void print_worst_case(std::ostream& out, const RiskReport& report, const std::vector<std::string>& estimators) {
  for (const auto& est : estimators) {
    if (est == "ls") continue;
    out << "estimator " << est << '\n';
    out << std::setw(6) << "n" << std::setw(22) << "worst rel_median_me" << std::setw(14) << "argmax gamma"
        << std::setw(12) << "mc_se" << std::setw(18) << "worst rel_mse" << '\n';
    const auto me = worst_case_curve(report, Measure::RelMedianMe, est);
    const auto mse = worst_case_curve(report, Measure::RelMse, est);
    for (std::size_t i = 0; i < me.size(); ++i) {
      out << std::setw(6) << me[i].n << std::setw(22) << brief(me[i].max_value)
          << std::setw(14) << brief(me[i].argmax_gamma) << std::setw(12)
          << brief(me[i].se) << std::setw(18)
          << brief(mse[i].max_value) << '\n';
    }
  }
}

/// Prints the cells whose failure rate exceeds the limit; returns their count.
inline int report_failures(std::ostream& err, const RiskReport& report) {
  int bad = 0;
  for (const auto& r : report.rows) {
    if (r.failure_rate() > kMaxFailureRate) {
      err << "failure rate " << brief(r.failure_rate()) << " for " << r.estimator
          << " at n=" << r.n << " gamma=" << brief(r.gamma) << '\n';
      ++bad;
    }
  }
  return bad;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline int run_setup_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SetupOverrides ov;
  ov.replications = cfg.replications;
  ov.n_list = cfg.n_list;
  ov.gamma_points = cfg.gamma_points;
  ov.seed = cfg.seed;
  ov.threads = cfg.threads;
  ov.estimators = cfg.estimators;
  ov.bootstrap_resamples = cfg.bootstrap_resamples;
  const auto dir = prepare_output_dir(cfg.output_dir);
  const RiskReport report = run_setup(cfg.setup_id, ov);
  const auto csv = dir / ("setup_" + to_string(cfg.setup_id) + ".csv");
  write_report_file(csv, report);
  out << "wrote " << csv.string() << '\n';
  for (const auto& est : cfg.estimators) {
    if (est == "scad2") {
      for (const auto& p : write_figure_files(report, cfg.setup_id, dir, est)) out << "wrote " << p.string() << '\n';
    }
  }
  out << "Setup " << to_string(cfg.setup_id) << ", R=" << cfg.replications << ", seed=" << cfg.seed << '\n';
  print_worst_case(out, report, cfg.estimators);
  return report_failures(err, report) > 0 ? kExitFailures : kExitOk;
}

inline int run_sweep_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Vector theta0 = to_vector(cfg.theta0);
  const Vector eta = to_vector(cfg.eta);
  const int k = static_cast<int>(theta0.size());
  LambdaRule rule;
  rule.scale = cfg.lambda_scale;
  std::vector<Estimator> estimators;
  for (const auto& name : cfg.estimators) estimators.push_back(make_estimator(parse_estimator_name(name, rule), name));

  std::vector<DesignSpec> designs;
  if (!cfg.design_csv.empty()) {
    designs.push_back(DesignSpec::fixed(load_matrix_csv(cfg.design_csv)));
  } else {
    for (int n : cfg.n_list) designs.push_back(DesignSpec::gaussian_ar(n, k, cfg.rho));
  }
  const auto dir = prepare_output_dir(cfg.output_dir);
  RiskReport report;
  report.master_seed = cfg.seed;
  report.replications = cfg.replications;
  const auto grid = equidistant_grid(0.0, cfg.gamma_max, cfg.gamma_points);
  for (const auto& design : designs) {
    McOptions opts;
    opts.replications = cfg.replications;
    opts.master_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(design.n));
    opts.threads = cfg.threads;
    opts.bootstrap_resamples = cfg.bootstrap_resamples;
    for (auto& r : run_sweep(design, ParameterPath{theta0, eta, grid, design.n}, estimators, opts, "sweep")) {
      r.seed = cfg.seed;
      report.rows.push_back(std::move(r));
    }
  }
  const auto csv = dir / "sweep.csv";
  write_report_file(csv, report);
  out << "wrote " << csv.string() << '\n';
  print_worst_case(out, report, cfg.estimators);
  return report_failures(err, report) > 0 ? kExitFailures : kExitOk;
}

inline int run_hodges_command(const RunConfig& cfg, std::ostream& out) {
  const auto mu = equidistant_grid(-cfg.mu_max, cfg.mu_max, cfg.mu_points);
  const auto curve = hodges_risk_curve(cfg.n_list, mu, cfg.replications, cfg.seed);
  const auto dir = prepare_output_dir(cfg.output_dir);
  const auto csv = dir / "hodges.csv";
  std::ofstream f(csv);
  if (!f) throw std::runtime_error("cannot write " + csv.string());
  write_provenance(f, cfg.seed, cfg.replications);
  f << "n,mu,value,mc_se\n";
  for (const auto& p : curve) {
    f << p.n << ',' << sparse_risk::detail::format_number(p.mu) << ',' << sparse_risk::detail::format_number(p.risk)
      << ',' << sparse_risk::detail::format_number(p.se) << '\n';
  }
  if (!f) throw std::runtime_error("write failed for " + csv.string());
  out << "wrote " << csv.string() << '\n';
  out << std::setw(8) << "n" << std::setw(16) << "max n*MSE" << std::setw(12) << "argmax mu" << std::setw(12)
      << "mc_se" << '\n';
  for (int n : cfg.n_list) {
    const HodgesRiskPoint* best = nullptr;
    for (const auto& p : curve) {
      if (p.n == n && (best == nullptr || p.risk > best->risk)) best = &p;
    }
    out << std::setw(8) << n << std::setw(16) << brief(best->risk) << std::setw(12)
        << brief(std::abs(best->mu)) << std::setw(12)
        << brief(best->se) << '\n';
  }
  return kExitOk;
}

inline int run_oracle_command(const RunConfig& cfg, std::ostream& out) {
  const auto r = run_oracle_check(1000, 500, cfg.seed);
  out << "scad_univariate_min vs grid search (" << r.grid_cases
      << " cases): max deviation " << brief(r.closed_form_vs_grid) << '\n';
  out << "LQA vs closed form, X'X = nI (" << r.solver_cases
      << " cases): max deviation " << brief(r.lqa_vs_closed_form) << '\n';
  out << "coordinate descent vs closed form, X'X = nI (" << r.solver_cases
      << " cases): max deviation " << brief(r.cd_vs_closed_form) << '\n';
  const bool ok = r.closed_form_vs_grid < 1e-4 && r.lqa_vs_closed_form < 1e-6 && r.cd_vs_closed_form < 1e-6;
  out << (ok ? "oracle check passed" : "oracle check FAILED") << '\n';
  return ok ? kExitOk : kExitFailures;
}

inline int run_lower_bound_command(const RunConfig& cfg, std::ostream& out) {
  const Vector s = to_vector(cfg.s);
  LambdaRule rule;
  rule.scale = cfg.lambda_scale;
  std::string name = cfg.estimators.back();
  for (const auto& e : cfg.estimators) {
    if (e != "ls") {
      name = e;
      break;
    }
  }
  const Estimator est = make_estimator(parse_estimator_name(name, rule), name);
  const Estimator ls = make_estimator(LeastSquaresConfig{}, "ls");
  const auto dir = prepare_output_dir(cfg.output_dir);
  const auto csv = dir / "lower_bound.csv";
  std::ofstream f(csv);
  if (!f) throw std::runtime_error("cannot write " + csv.string());
  write_provenance(f, cfg.seed, cfg.replications);
  f << "n,estimator,p_hat,bound,risk,risk_se\n";
  out << "estimator " << name << ", ||s||^2 = " << brief(s.squaredNorm()) << '\n';
  out << std::setw(6) << "n" << std::setw(12) << "p_hat" << std::setw(12) << "bound" << std::setw(14) << "n*MSE"
      << std::setw(14) << "LS n*MSE" << '\n';
  for (int n : cfg.n_list) {
    const auto r = lower_bound_diagnostic(s, n, est, cfg.replications, cfg.seed, cfg.threads);
    const auto base = lower_bound_diagnostic(s, n, ls, cfg.replications, cfg.seed, cfg.threads);
    for (const auto* row : {&r, &base}) {
      f << n << ',' << (row == &r ? name : std::string("ls")) << ',' << sparse_risk::detail::format_number(row->p_hat)
        << ',' << sparse_risk::detail::format_number(row->bound) << ','
        << sparse_risk::detail::format_number(row->risk) << ',' << sparse_risk::detail::format_number(row->risk_se)
        << '\n';
    }
    out << std::setw(6) << n << std::setw(12) << brief(r.p_hat) << std::setw(12)
        << brief(r.bound) << std::setw(14) << brief(r.risk)
        << std::setw(14) << brief(base.risk) << '\n';
  }
  if (!f) throw std::runtime_error("write failed for " + csv.string());
  out << "wrote " << csv.string() << '\n';
  return kExitOk;
}

}  // namespace detail

/// Runs the configured command. Returns the process exit status; runtime
/// failures (unwritable output, numeric errors) are reported on `err`.
inline int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Command::Setup: return detail::run_setup_command(cfg, out, err);
      case Command::Sweep: return detail::run_sweep_command(cfg, out, err);
      case Command::Hodges: return detail::run_hodges_command(cfg, out);
      case Command::OracleCheck: return detail::run_oracle_command(cfg, out);
      case Command::LowerBound: return detail::run_lower_bound_command(cfg, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace sparse_risk::cli
