#pragma once

#include "sparse_risk/common.hpp"
#include "sparse_risk/datagen.hpp"
#include "sparse_risk/estimator_config.hpp"
#include "sparse_risk/risk.hpp"
#include "sparse_risk/rng.hpp"
#include "sparse_risk/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace sparse_risk {

enum class SetupId { I = 1, II, III, IV, V, VI };

inline std::string to_string(SetupId id) {
  static const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
  return names[static_cast<int>(id) - 1];
}

inline SetupId parse_setup_id(const std::string& s) {
  for (int i = 1; i <= 6; ++i) {
    const auto id = static_cast<SetupId>(i);
    if (s == to_string(id) || s == std::to_string(i)) return id;
  }
  throw InvalidParameter("unknown setup id '" + s + "' (expected I..VI)");
}

inline Vector default_theta0() {
  Vector t(8);
  t << 3, 1.5, 0, 0, 2, 0, 0, 0;
  return t;
}

inline std::vector<int> default_n_list() { return {60, 120, 240, 480, 960}; }

struct SetupDef {
  SetupId id = SetupId::I;
  Vector theta0 = default_theta0();
  Vector eta;
  double gamma_max = 8.0;
  LambdaRule lambda_rule;
  std::vector<int> n_list = default_n_list();
  int replications = 500;
  int gamma_points = 101;
  double rho = 0.5;
};

inline SetupDef setup_definition(SetupId id) {
  SetupDef def;
  def.id = id;
  def.eta = Vector(8);
  def.eta << 0, 0, 1, 1, 0, 1, 1, 1;
  switch (id) {
    case SetupId::I: break;
    case SetupId::II: def.eta << 0, 0, 1, 1, 0, 0, 0, 0; break;
    case SetupId::III:
      def.eta << 0, 0, 1, 1, 0, 0.1, 0.1, 0.1;
      def.gamma_max = 80.0;
      break;
    case SetupId::IV: def.lambda_rule.scale = LambdaScale::Pow10; break;
    case SetupId::V: def.lambda_rule.scale = LambdaScale::Pow4; break;
    case SetupId::VI: def.lambda_rule.scale = LambdaScale::Unit; break;
  }
  return def;
}

struct SetupOverrides {
  std::optional<int> replications;
  std::optional<std::vector<int>> n_list;
  std::optional<int> gamma_points;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> estimators = {"ls", "scad2"};
  int bootstrap_resamples = 200;
};

/// Sweeps n_list x gamma grid for one setup. Each sample size uses its own
/// master seed derived from the run seed; all gammas at that n share draws.
inline RiskReport run_setup(SetupId id, const SetupOverrides& ov = {}) {
  SetupDef def = setup_definition(id);
  if (ov.replications) def.replications = *ov.replications;
  if (ov.n_list) def.n_list = *ov.n_list;
  if (ov.gamma_points) def.gamma_points = *ov.gamma_points;
  detail::require(def.replications >= 1, "run_setup: replications must be positive");
  detail::require(!def.n_list.empty(), "run_setup: empty n list");
  detail::require(!ov.estimators.empty(), "run_setup: no estimators");

  std::vector<Estimator> estimators;
  for (const auto& name : ov.estimators) {
    estimators.push_back(make_estimator(parse_estimator_name(name, def.lambda_rule), name));
  }

  RiskReport report;
  report.master_seed = ov.seed;
  report.replications = def.replications;
  const auto grid = equidistant_grid(0.0, def.gamma_max, def.gamma_points);
  for (int n : def.n_list) {
    detail::require(n > static_cast<int>(def.theta0.size()), "run_setup: n must exceed k");
    const auto design = DesignSpec::gaussian_ar(n, static_cast<int>(def.theta0.size()), def.rho);
    const ParameterPath path{def.theta0, def.eta, grid, n};
    McOptions opts;
    opts.replications = def.replications;
    opts.master_seed = derive_seed(ov.seed, static_cast<std::uint64_t>(n));
    opts.threads = ov.threads;
    opts.bootstrap_resamples = ov.bootstrap_resamples;
    auto rows = run_sweep(design, path, estimators, opts, to_string(id));
    for (auto& r : rows) {
      r.seed = ov.seed;
      report.rows.push_back(std::move(r));
    }
  }
  return report;
}

enum class Measure { RelMedianMe, RelMse };

struct CurvePoint {
  double gamma = 0.0;
  double value = 0.0;
  double se = 0.0;
};

/// Rows of one (n, estimator) as a curve over gamma, ascending.
inline std::vector<CurvePoint> risk_curve(const RiskReport& report, int n, const std::string& estimator,
                                          Measure measure) {
  std::vector<CurvePoint> curve;
  for (const auto& r : report.rows) {
    if (r.n != n || r.estimator != estimator) continue;
    if (measure == Measure::RelMedianMe) {
      curve.push_back({r.gamma, r.rel_median_me, r.se_median_me});
    } else {
      curve.push_back({r.gamma, r.rel_mse, r.se_mse});
    }
  }
  std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
  return curve;
}

struct WorstCase {
  int n = 0;
  double max_value = 0.0;
  double argmax_gamma = 0.0;
  double se = 0.0;  ///< bootstrap SE at the argmax cell
};

/// Per sample size, the maximum of the measure over the gamma grid. Ties go
/// to the smallest gamma.
inline std::vector<WorstCase> worst_case_curve(const RiskReport& report, Measure measure,
                                               const std::string& estimator = "scad2") {
  std::vector<int> ns;
  for (const auto& r : report.rows) {
    if (r.estimator == estimator && std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  }
  if (ns.empty()) throw InvalidParameter("worst_case_curve: no rows for estimator '" + estimator + "'");
  std::sort(ns.begin(), ns.end());
  std::vector<WorstCase> out;
  for (int n : ns) {
    const auto curve = risk_curve(report, n, estimator, measure);
    WorstCase wc{n, curve.front().value, curve.front().gamma, curve.front().se};
    for (const auto& p : curve) {
      if (p.value > wc.max_value) wc = {n, p.value, p.gamma, p.se};
    }
    out.push_back(wc);
  }
  return out;
}

/// Three-point moving average; the two end points average their two
/// available values.
inline std::vector<double> smooth3(const std::vector<double>& v) {
  const auto m = v.size();
  if (m < 3) return v;
  std::vector<double> s(m);
  s[0] = 0.5 * (v[0] + v[1]);
  s[m - 1] = 0.5 * (v[m - 2] + v[m - 1]);
  for (std::size_t i = 1; i + 1 < m; ++i) s[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
  return s;
}

/// Indices of interior strict local maxima. A plateau counts once, at its
/// first index, when both neighbours of the plateau are lower.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
  std::vector<std::size_t> peaks;
  const auto m = v.size();
  std::size_t i = 1;
  while (i + 1 < m) {
    std::size_t j = i;
    while (j + 1 < m && v[j + 1] == v[i]) ++j;
    if (j + 1 < m && v[i - 1] < v[i] && v[j + 1] < v[i]) peaks.push_back(i);
    i = j + 1;
  }
  return peaks;
}

inline std::size_t count_smoothed_peaks(const std::vector<double>& values) {
  return local_maxima(smooth3(values)).size();
}

struct LowerBoundResult {
  int n = 0;
  double p_hat = 0.0;   ///< MC estimate of P(theta_hat = 0) at theta_n = -s / sqrt(n)
  double bound = 0.0;   ///< l(s) * p_hat with l(s) = s's
  double risk = 0.0;    ///< MC estimate of E n ||theta_hat - theta_n||^2
  double risk_se = 0.0;
};

/// Regression design with X'X = n * rho^|i-j| exactly, drawn once per (seed, n).
inline DesignSpec moment_matched_ar_design(int n, int k, double rho, std::uint64_t seed) {
  RngStream stream(seed, {static_cast<std::uint64_t>(n), StreamPurpose::FixedDesign, static_cast<std::uint64_t>(k)});
  return DesignSpec::fixed(moment_matched_design(n, ar1_covariance(k, rho), stream));
}

/// Evaluates l(s) P_{n, theta_n}(theta_hat = 0) at theta_n = -s / sqrt(n)
/// with quadratic loss, together with the scaled risk on the same draws.
/// Without an explicit design the fixed moment-matched AR(0.5) design is used.
inline LowerBoundResult lower_bound_diagnostic(const Vector& s, int n, const Estimator& estimator, int replications,
                                               std::uint64_t seed, int threads = 1,
                                               std::optional<DesignSpec> design = std::nullopt) {
  detail::require(replications >= 1, "lower_bound_diagnostic: replications must be positive");
  const int k = static_cast<int>(s.size());
  if (!design) design = moment_matched_ar_design(n, k, 0.5, seed);
  const double root_n = std::sqrt(static_cast<double>(n));
  const ParameterPath path{-s / root_n, Vector::Zero(k), {0.0}, n};
  McOptions opts;
  opts.replications = replications;
  opts.master_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
  opts.threads = threads;
  opts.bootstrap_resamples = 0;
  const auto rows = run_sweep(*design, path, {estimator}, opts, "lower-bound");
  const auto& row = rows.front();
  LowerBoundResult out;
  out.n = n;
  out.p_hat = row.zero_rate;
  out.bound = s.squaredNorm() * out.p_hat;
  out.risk = n * row.mean_sq_error;
  out.risk_se = n * row.se_sq_error;
  return out;
}

struct BallSweepResult {
  int n = 0;
  double radius = 0.0;
  double max_risk = 0.0;  ///< max over the grid of E n ||theta_hat - theta||^2
  double se = 0.0;
  int direction = 0;      ///< coordinate of the maximizing ray
  double t = 0.0;         ///< position on that ray
};

/// Maximal scaled quadratic risk over theta = t e_i inside the ball of radius
/// n^{rho_exponent} around the origin, for t on `radial_points` equidistant
/// values in [0, radius] and every coordinate direction i.
inline std::vector<BallSweepResult> ball_restricted_sweep(double rho_exponent, const std::vector<int>& n_list,
                                                          const Estimator& estimator, int replications,
                                                          std::uint64_t seed, int k = 8, int radial_points = 50,
                                                          int threads = 1) {
  detail::require(rho_exponent > -0.5 && rho_exponent <= 0.0, "ball_restricted_sweep: exponent must be in (-1/2, 0]");
  detail::require(radial_points >= 2, "ball_restricted_sweep: need at least two radial points");
  std::vector<BallSweepResult> out;
  for (int n : n_list) {
    const DesignSpec design = moment_matched_ar_design(n, k, 0.5, seed);
    const double radius = std::pow(static_cast<double>(n), rho_exponent);
    const double root_n = std::sqrt(static_cast<double>(n));
    BallSweepResult best{n, radius, -1.0, 0.0, 0, 0.0};
    McOptions opts;
    opts.replications = replications;
    opts.master_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    opts.threads = threads;
    opts.bootstrap_resamples = 0;
    for (int i = 0; i < k; ++i) {
      // theta(gamma) = (gamma / sqrt(n)) * sqrt(n) e_i = gamma e_i.
      Vector eta = Vector::Zero(k);
      eta(i) = root_n;
      const ParameterPath path{Vector::Zero(k), eta, equidistant_grid(0.0, radius, radial_points), n};
      const auto rows = run_sweep(design, path, {estimator}, opts, "ball");
      for (const auto& r : rows) {
        const double risk = n * r.mean_sq_error;
        if (risk > best.max_risk) best = {n, radius, risk, n * r.se_sq_error, i, r.gamma};
      }
    }
    out.push_back(best);
  }
  return out;
}

struct HodgesRiskPoint {
  int n = 0;
  double mu = 0.0;
  double risk = 0.0;  ///< n E (theta_hat - mu)^2
  double se = 0.0;
};

/// Scaled MSE of Hodges' estimator for the mean of n iid N(mu, 1) draws. The
/// sample mean is drawn directly as mu + z / sqrt(n); z is shared across mu.
inline std::vector<HodgesRiskPoint> hodges_risk_curve(const std::vector<int>& n_list, const std::vector<double>& mu_grid,
                                                      int replications, std::uint64_t seed) {
  detail::require(replications >= 1, "hodges_risk_curve: replications must be positive");
  detail::require(!mu_grid.empty(), "hodges_risk_curve: empty mu grid");
  const auto m = mu_grid.size();
  for (std::size_t i = 0; i < m; ++i) {
    detail::require(std::abs(mu_grid[i] + mu_grid[m - 1 - i]) <= 1e-12 * (1.0 + std::abs(mu_grid[i])),
                    "hodges_risk_curve: mu grid must be symmetric about 0");
  }
  std::vector<HodgesRiskPoint> out;
  for (int n : n_list) {
    detail::require(n >= 1, "hodges_risk_curve: n must be positive");
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> z(static_cast<std::size_t>(replications));
    for (int r = 0; r < replications; ++r) {
      RngStream stream(seed, {static_cast<std::uint64_t>(r), StreamPurpose::Hodges, static_cast<std::uint64_t>(n)});
      z[static_cast<std::size_t>(r)] = stream.normal();
    }
    for (double mu : mu_grid) {
      std::vector<double> loss(z.size());
      double sum = 0.0;
      for (std::size_t r = 0; r < z.size(); ++r) {
        const double ybar = mu + z[r] / root_n;
        const double d = hodges_scalar(ybar, n) - mu;
        loss[r] = n * d * d;
        sum += loss[r];
      }
      const double mean = sum / static_cast<double>(z.size());
      out.push_back({n, mu, mean, detail::sample_sd(loss) / std::sqrt(static_cast<double>(z.size()))});
    }
  }
  return out;
}

/// Figure number of a setup, if it has one (Setup II is not plotted).
inline std::optional<int> figure_number(SetupId id) {
  switch (id) {
    case SetupId::I: return 1;
    case SetupId::III: return 2;
    case SetupId::IV: return 3;
    case SetupId::V: return 4;
    case SetupId::VI: return 5;
    default: return std::nullopt;
  }
}

/// Writes <stem>_left.csv (median relative model error) and <stem>_right.csv
/// (relative MSE) with columns n,gamma,value,mc_se. Returns the paths.
inline std::vector<std::filesystem::path> write_figure_files(const RiskReport& report, SetupId id,
                                                             const std::filesystem::path& dir,
                                                             const std::string& estimator = "scad2") {
  const auto fig = figure_number(id);
  const std::string stem = fig ? "fig" + std::to_string(*fig) : "setup" + to_string(id);
  std::vector<int> ns;
  for (const auto& r : report.rows) {
    if (r.estimator == estimator && std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  }
  std::sort(ns.begin(), ns.end());
  std::vector<std::filesystem::path> written;
  for (auto [suffix, measure] : {std::pair{"_left.csv", Measure::RelMedianMe}, std::pair{"_right.csv", Measure::RelMse}}) {
    const auto path = dir / (stem + suffix);
    std::ofstream out(path);
    if (!out) throw InvalidParameter("cannot write " + path.string());
    write_provenance(out, report.master_seed, report.replications);
    out << "n,gamma,value,mc_se\n";
    for (int n : ns) {
      for (const auto& p : risk_curve(report, n, estimator, measure)) {
        out << n << ',' << detail::format_number(p.gamma) << ',' << detail::format_number(p.value) << ','
            << detail::format_number(p.se) << '\n';
      }
    }
    if (!out) throw InvalidParameter("write failed for " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace sparse_risk
