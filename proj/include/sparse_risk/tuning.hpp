#pragma once

#include "sparse_risk/common.hpp"
#include "sparse_risk/estimators.hpp"
#include "sparse_risk/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sparse_risk {

/// How the base grid delta * sigma_hat / sqrt(n) is rescaled with n.
enum class LambdaScale {
  LogRatio,  ///< log(n) / log(60)
  Pow10,     ///< (n / 60)^(1/10)
  Pow4,      ///< (n / 60)^(1/4)
  Unit,      ///< 1
};

inline std::string to_string(LambdaScale s) {
  switch (s) {
    case LambdaScale::LogRatio: return "log";
    case LambdaScale::Pow10: return "pow10";
    case LambdaScale::Pow4: return "pow4";
    case LambdaScale::Unit: return "unit";
  }
  return "?";
}

inline LambdaScale parse_lambda_scale(const std::string& s) {
  if (s == "log") return LambdaScale::LogRatio;
  if (s == "pow10") return LambdaScale::Pow10;
  if (s == "pow4") return LambdaScale::Pow4;
  if (s == "unit") return LambdaScale::Unit;
  throw InvalidParameter("unknown lambda scale '" + s + "' (expected log, pow10, pow4, unit)");
}

/// 0.9, 1.1, ..., 1.9 and the endpoint 2.0.
inline std::vector<double> default_deltas() { return {0.9, 1.1, 1.3, 1.5, 1.7, 1.9, 2.0}; }

struct LambdaRule {
  std::vector<double> deltas = default_deltas();
  LambdaScale scale = LambdaScale::LogRatio;

  double scale_factor(int n) const {
    const double nn = n;
    switch (scale) {
      case LambdaScale::LogRatio: return std::log(nn) / std::log(60.0);
      case LambdaScale::Pow10: return std::pow(nn / 60.0, 0.1);
      case LambdaScale::Pow4: return std::pow(nn / 60.0, 0.25);
      case LambdaScale::Unit: return 1.0;
    }
    return 1.0;
  }
};

/// Square root of the unbiased residual variance of the full LS fit.
inline double sigma_hat(const NormalEquations& eq) {
  detail::require(eq.n > eq.k(), "sigma_hat: need n > k");
  const Vector theta = least_squares_solution(eq);
  return std::sqrt(eq.rss(theta) / (eq.n - eq.k()));
}

/// Same, with the residuals formed explicitly.
inline double sigma_hat(const Matrix& x, const Vector& y) {
  detail::require_same_size(x.rows(), y.size(), "sigma_hat: rows of X vs y");
  detail::require(x.rows() > x.cols(), "sigma_hat: need n > k");
  const Vector theta = least_squares_solution(NormalEquations::from_data(x, y));
  const Vector resid = y - x * theta;
  return std::sqrt(resid.squaredNorm() / static_cast<double>(x.rows() - x.cols()));
}

/// {delta * (sigma_hat / sqrt(n)) * scale(n)}, ascending.
inline std::vector<double> lambda_grid(const LambdaRule& rule, int n, double sigma) {
  detail::require(n >= 2, "lambda_grid: n must be >= 2");
  detail::require(!rule.deltas.empty(), "lambda_grid: empty delta set");
  detail::require(sigma >= 0.0, "lambda_grid: sigma_hat must be nonnegative");
  const double base = sigma / std::sqrt(static_cast<double>(n)) * rule.scale_factor(n);
  std::vector<double> grid;
  grid.reserve(rule.deltas.size());
  for (double d : rule.deltas) {
    detail::require(d >= 0.0, "lambda_grid: deltas must be nonnegative");
    grid.push_back(d * base);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

enum class ScadSolver { Lqa, CoordinateDescent };

inline SolverOptions default_solver_options(ScadSolver solver) {
  if (solver == ScadSolver::Lqa) return {};
  return {.tol = 1e-10, .max_iter = 10000};
}

inline FitResult fit_scad(const NormalEquations& eq, const ScadParams& p, ScadSolver solver,
                          const std::optional<SolverOptions>& opts = std::nullopt) {
  const SolverOptions o = opts.value_or(default_solver_options(solver));
  return solver == ScadSolver::Lqa ? fit_scad_lqa(eq, p, o) : fit_scad_cd(eq, p, o);
}

/// Effective number of parameters trace[X_A (X_A'X_A + n S)^{-1} X_A'] on the
/// active set A, S = diag(p'(|theta_j|) / |theta_j|).
inline double gcv_effective_parameters(const NormalEquations& eq, const FitResult& fit, const ScadParams& p) {
  const std::vector<int> active = detail::support(fit.theta_hat);
  if (active.empty()) return 0.0;
  const Matrix g = detail::sub_matrix(eq.gram, active);
  Matrix m = g;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double t = std::abs(fit.theta_hat(active[i]));
    const auto ii = static_cast<Eigen::Index>(i);
    m(ii, ii) += eq.n * scad_derivative(t, p) / t;
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("gcv: ridge system not positive definite");
  return llt.solve(g).trace();
}

/// GCV(lambda) = (RSS / n) / (1 - e / n)^2.
inline double gcv_score(const NormalEquations& eq, const FitResult& fit, const ScadParams& p) {
  const double n = eq.n;
  const double e = gcv_effective_parameters(eq, fit, p);
  const double denom = 1.0 - e / n;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return (eq.rss(fit.theta_hat) / n) / (denom * denom);
}

struct GcvResult {
  double lambda = 0.0;
  FitResult fit;
  double score = 0.0;
  std::vector<double> grid;    ///< ascending
  std::vector<double> scores;  ///< aligned with grid
  bool converged = true;       ///< false if no fit on the grid converged
};

/// Fits SCAD for every lambda on the grid and keeps the GCV minimizer.
/// Ties go to the smaller lambda; grid order does not matter.
inline GcvResult gcv_select(const NormalEquations& eq, double a, std::vector<double> grid,
                            ScadSolver solver = ScadSolver::Lqa,
                            const std::optional<SolverOptions>& opts = std::nullopt) {
  detail::require(!grid.empty(), "gcv_select: empty lambda grid");
  std::sort(grid.begin(), grid.end());
  GcvResult out;
  out.grid = grid;
  out.score = std::numeric_limits<double>::infinity();
  bool have = false;
  bool any_converged = false;
  for (double lambda : grid) {
    const ScadParams p{lambda, a};
    FitResult fit = fit_scad(eq, p, solver, opts);
    const double score = gcv_score(eq, fit, p);
    out.scores.push_back(score);
    any_converged = any_converged || fit.converged;
    if (!have || score < out.score) {
      have = true;
      out.score = score;
      out.lambda = lambda;
      out.fit = std::move(fit);
    }
  }
  out.converged = any_converged;
  return out;
}

}  // namespace sparse_risk
