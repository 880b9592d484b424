#pragma once

// Test-side data builders. They use their own generator (std::mt19937_64 with
// a fixed seed) rather than the library's streams.

#include "sparse_risk/common.hpp"
#include "sparse_risk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace test_support {

using sparse_risk::Matrix;
using sparse_risk::Vector;

inline Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = z(gen);
  }
  return m;
}

inline Vector gaussian_vector(int size, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = z(gen);
  return v;
}

/// n x k matrix with X'X = n I.
inline Matrix orthonormal_design(int n, int k, std::mt19937_64& gen) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, k, gen));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  return std::sqrt(static_cast<double>(n)) * q;
}

/// Rows drawn from N(0, rho^|i-j|) by the AR(1) recursion.
inline Matrix ar_design(int n, int k, double rho, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Matrix x(n, k);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = z(gen);
    for (int j = 1; j < k; ++j) x(i, j) = rho * x(i, j - 1) + innov * z(gen);
  }
  return x;
}

inline Vector setup_theta0() {
  Vector t(8);
  t << 3, 1.5, 0, 0, 2, 0, 0, 0;
  return t;
}

/// Brute-force minimizer of 0.5 (z - t)^2 + w * pen(|t|) on [lo, hi] with the
/// given step, evaluated point by point.
template <class Penalty>
double grid_argmin(double z, double w, Penalty&& pen, double lo, double hi, double step) {
  double best_t = lo;
  double best = 0.5 * (z - lo) * (z - lo) + w * pen(std::abs(lo));
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 0.5));
  for (long i = 1; i <= count; ++i) {
    const double t = lo + step * static_cast<double>(i);
    const double v = 0.5 * (z - t) * (z - t) + w * pen(std::abs(t));
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

/// Two-level grid search: step `coarse` over [lo, hi], then step `fine`
/// within two coarse steps of the coarse winner.
template <class Penalty>
double refined_grid_argmin(double z, double w, Penalty&& pen, double lo, double hi, double coarse = 1e-3,
                           double fine = 1e-6) {
  const double rough = grid_argmin(z, w, pen, lo, hi, coarse);
  return grid_argmin(z, w, pen, std::max(lo, rough - 2 * coarse), std::min(hi, rough + 2 * coarse), fine);
}

/// SCAD penalty written out independently of the library.
inline double scad_reference(double t, double lambda, double a) {
  if (t <= lambda) return lambda * t;
  if (t <= a * lambda) return (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0));
  return (a + 1.0) * lambda * lambda / 2.0;
}

}  // namespace test_support
