#pragma once

#include "sparse_risk/common.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace sparse_risk {

/// SCAD tuning: regularization level lambda and shape a (> 2).
struct ScadParams {
  double lambda = 0.0;
  double a = 3.7;

  void validate() const {
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "ScadParams: lambda must be >= 0");
    detail::require(a > 2.0, "ScadParams: a must exceed 2");
  }
};

/// SCAD penalty p_lambda(t) for t = |theta| >= 0. Linear up to lambda,
/// quadratic up to a*lambda, constant afterwards.
inline double scad_penalty(double theta_abs, const ScadParams& p) {
  detail::require(theta_abs >= 0.0, "scad_penalty: argument must be nonnegative");
  p.validate();
  const double lam = p.lambda;
  if (theta_abs <= lam) return lam * theta_abs;
  if (theta_abs < p.a * lam) {
    return -(theta_abs * theta_abs - 2.0 * p.a * lam * theta_abs + lam * lam) / (2.0 * (p.a - 1.0));
  }
  return (p.a + 1.0) * lam * lam / 2.0;
}

/// Derivative of scad_penalty in t. Kinks take the left-branch value.
inline double scad_derivative(double theta_abs, const ScadParams& p) {
  detail::require(theta_abs >= 0.0, "scad_derivative: argument must be nonnegative");
  p.validate();
  const double lam = p.lambda;
  if (theta_abs <= lam) return lam;
  if (theta_abs <= p.a * lam) return (p.a * lam - theta_abs) / (p.a - 1.0);
  return 0.0;
}

/// Exact minimizer of 0.5 (z - theta)^2 + p_lambda(|theta|).
inline double scad_univariate_min(double z, const ScadParams& p) {
  p.validate();
  const double lam = p.lambda;
  const double az = std::abs(z);
  const double sgn = z < 0.0 ? -1.0 : 1.0;
  if (az <= 2.0 * lam) return sgn * std::max(az - lam, 0.0);
  if (az <= p.a * lam) return ((p.a - 1.0) * z - sgn * p.a * lam) / (p.a - 2.0);
  return z;
}

/// Minimizer of 0.5 (z - theta)^2 + weight * p_lambda(|theta|) for weight > 0.
///
/// The objective is a piecewise quadratic in theta, so the minimizer is one of
/// the clamped stationary points of the pieces or a breakpoint. All candidates
/// on the side of sign(z) are evaluated; the opposite side never wins. With
/// weight == 1 this agrees with scad_univariate_min.
inline double scad_weighted_min(double z, const ScadParams& p, double weight) {
  p.validate();
  detail::require(weight > 0.0, "scad_weighted_min: weight must be positive");
  const double lam = p.lambda;
  const double a = p.a;
  const double az = std::abs(z);
  const double sgn = z < 0.0 ? -1.0 : 1.0;

  auto objective = [&](double t) {  // t >= 0 on the side of z
    const double d = az - t;
    return 0.5 * d * d + weight * scad_penalty(t, p);
  };
  auto clamp = [](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };

  std::array<double, 6> candidates{};
  std::size_t count = 0;
  candidates[count++] = 0.0;
  candidates[count++] = lam;
  candidates[count++] = a * lam;
  candidates[count++] = clamp(az - weight * lam, 0.0, lam);
  const double curvature = 1.0 - weight / (a - 1.0);
  if (curvature > 0.0) {
    const double mid = (az - weight * a * lam / (a - 1.0)) / curvature;
    candidates[count++] = clamp(mid, lam, a * lam);
  }
  candidates[count++] = std::max(az, a * lam);

  double best_t = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const double value = objective(candidates[i]);
    // Ties go to the smaller magnitude.
    if (value < best || (value == best && candidates[i] < best_t)) {
      best = value;
      best_t = candidates[i];
    }
  }
  return sgn * best_t;
}

}  // namespace sparse_risk
