#pragma once

// Self-checks behind `sparse_risk oracle-check`: the closed-form univariate
// SCAD minimizer against brute-force grid search, and both SCAD solvers
// against the closed form on designs with X'X = nI.

#include "sparse_risk/datagen.hpp"
#include "sparse_risk/estimators.hpp"
#include "sparse_risk/penalties.hpp"
#include "sparse_risk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace sparse_risk {

/// Grid minimizer of 0.5 (z - theta)^2 + p_lambda(|theta|) over [lo, hi]:
/// a pass with step `coarse` followed by a pass with step `fine` around the
/// coarse winner. Uses only scad_penalty.
inline double grid_minimize_scad(double z, const ScadParams& p, double lo = -10.0, double hi = 10.0,
                                 double coarse = 1e-3, double fine = 1e-6) {
  auto objective = [&](double t) { return 0.5 * (z - t) * (z - t) + scad_penalty(std::abs(t), p); };
  auto scan = [&](double a, double b, double step) {
    double best_t = a;
    double best = objective(a);
    const auto count = static_cast<long>(std::floor((b - a) / step + 0.5));
    for (long i = 1; i <= count; ++i) {
      const double t = a + step * static_cast<double>(i);
      const double v = objective(t);
      if (v < best) {
        best = v;
        best_t = t;
      }
    }
    return best_t;
  };
  const double rough = scan(lo, hi, coarse);
  return scan(std::max(lo, rough - 2.0 * coarse), std::min(hi, rough + 2.0 * coarse), fine);
}

struct OracleCheckResult {
  double closed_form_vs_grid = 0.0;  ///< max |closed form - grid| over the cases
  double lqa_vs_closed_form = 0.0;   ///< max coordinate deviation, LQA
  double cd_vs_closed_form = 0.0;    ///< max coordinate deviation, coordinate descent
  int grid_cases = 0;
  int solver_cases = 0;
};

/// Runs `grid_cases` random (z, lambda) grid comparisons and `solver_cases`
/// orthonormal-design solver comparisons (k = 8, n = 60, a = 3.7,
/// lambda uniform on [0.1, 2], z uniform on [-3 a lambda, 3 a lambda]).
inline OracleCheckResult run_oracle_check(int grid_cases, int solver_cases, std::uint64_t seed) {
  constexpr double a = 3.7;
  OracleCheckResult out;
  out.grid_cases = grid_cases;
  out.solver_cases = solver_cases;

  RngStream draws(seed, {0, StreamPurpose::Oracle, 0});
  for (int c = 0; c < grid_cases; ++c) {
    const double lambda = 0.1 + 1.9 * draws.uniform();
    const double z = (2.0 * draws.uniform() - 1.0) * 3.0 * a * lambda;
    const ScadParams p{lambda, a};
    const double grid = grid_minimize_scad(z, p, std::min(-10.0, z - 1.0), std::max(10.0, z + 1.0));
    out.closed_form_vs_grid = std::max(out.closed_form_vs_grid, std::abs(grid - scad_univariate_min(z, p)));
  }

  constexpr int n = 60;
  constexpr int k = 8;
  RngStream design_draws(seed, {1, StreamPurpose::Oracle, 0});
  const Matrix x = moment_matched_design(n, Matrix::Identity(k, k), design_draws);
  const NormalEquations base = NormalEquations::from_data(x, Vector::Zero(n));
  for (int c = 0; c < solver_cases; ++c) {
    const double lambda = 0.1 + 1.9 * draws.uniform();
    const ScadParams p{lambda, a};
    Vector z(k);
    for (int j = 0; j < k; ++j) z(j) = (2.0 * draws.uniform() - 1.0) * 3.0 * a * lambda;
    // With X'X = nI the LS coefficients are X'y / n, so X'y = n z gives z.
    NormalEquations eq = base;
    eq.xty = n * z;
    eq.yty = eq.xty.squaredNorm() / n + 1.0;
    const FitResult lqa = fit_scad_lqa(eq, p);
    const FitResult cd = fit_scad_cd(eq, p);
    for (int j = 0; j < k; ++j) {
      const double target = scad_univariate_min(z(j), p);
      out.lqa_vs_closed_form = std::max(out.lqa_vs_closed_form, std::abs(lqa.theta_hat(j) - target));
      out.cd_vs_closed_form = std::max(out.cd_vs_closed_form, std::abs(cd.theta_hat(j) - target));
    }
  }
  return out;
}

}  // namespace sparse_risk
