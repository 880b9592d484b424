#pragma once

#include "sparse_risk/common.hpp"
#include "sparse_risk/penalties.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace sparse_risk {

/// Sufficient statistics of a linear-model sample: X'X, X'y, y'y and n.
/// Every estimator here depends on the data only through these.
struct NormalEquations {
  Matrix gram;
  Vector xty;
  double yty = 0.0;
  int n = 0;

  static NormalEquations from_data(const Matrix& x, const Vector& y) {
    detail::require_same_size(x.rows(), y.size(), "NormalEquations: rows of X vs y");
    detail::require(x.rows() >= 1 && x.cols() >= 1, "NormalEquations: empty design");
    NormalEquations eq;
    eq.gram = x.transpose() * x;
    eq.xty = x.transpose() * y;
    eq.yty = y.squaredNorm();
    eq.n = static_cast<int>(x.rows());
    return eq;
  }

  int k() const { return static_cast<int>(gram.rows()); }

  /// ||y - X theta||^2, clamped at zero against cancellation.
  double rss(const Vector& theta) const {
    const double value = yty - 2.0 * theta.dot(xty) + theta.dot(gram * theta);
    return std::max(value, 0.0);
  }
};

/// r(theta): 1 where the coefficient is nonzero, 0 where it is exactly zero.
struct SparsityPattern {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : bits) c += b;
    return c;
  }
  bool all_zero() const { return count() == 0; }

  /// Componentwise r(this) <= r(other).
  bool subset_of(const SparsityPattern& other) const {
    if (other.size() != size()) throw DimensionMismatch("SparsityPattern: size mismatch");
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] > other.bits[i]) return false;
    }
    return true;
  }

  friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;
};

inline SparsityPattern sparsity_pattern(const Vector& theta) {
  SparsityPattern p;
  p.bits.resize(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    p.bits[static_cast<std::size_t>(i)] = theta(i) != 0.0 ? 1 : 0;
  }
  return p;
}

struct FitResult {
  Vector theta_hat;
  SparsityPattern pattern;
  double lambda_used = 0.0;
  int iterations = 0;
  bool converged = true;

  static FitResult from(Vector theta, double lambda = 0.0, int iterations = 0, bool converged = true) {
    FitResult r;
    r.pattern = sparsity_pattern(theta);
    r.theta_hat = std::move(theta);
    r.lambda_used = lambda;
    r.iterations = iterations;
    r.converged = converged;
    return r;
  }
};

/// Iteration controls for the SCAD solvers.
struct SolverOptions {
  double tol = 1e-8;        ///< max-norm step size at which iteration stops
  int max_iter = 100;       ///< LQA iterations, or coordinate-descent sweeps
  double zero_tol = 1e-8;   ///< LQA deletes coordinates below this magnitude
  bool polish = true;       ///< finish LQA with an exact active-set solve
};

namespace detail {

/// Cholesky solve of a symmetric positive definite system; throws
/// SingularDesign when the matrix is numerically singular. The conditioning
/// check is skipped for ridge-type systems whose diagonal is deliberately huge.
inline Vector spd_solve(const Matrix& a, const Vector& b, const char* who, bool check_rcond = true) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success || (check_rcond && !(llt.rcond() > 1e-13))) {
    throw SingularDesign(std::string(who) + ": design is rank deficient");
  }
  return llt.solve(b);
}

inline std::vector<int> support(const Vector& theta) {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (theta(j) != 0.0) idx.push_back(static_cast<int>(j));
  }
  return idx;
}

inline Matrix sub_matrix(const Matrix& m, const std::vector<int>& idx) {
  const auto s = static_cast<Eigen::Index>(idx.size());
  Matrix out(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) out(i, j) = m(idx[i], idx[j]);
  }
  return out;
}

inline Vector sub_vector(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace detail

inline Vector least_squares_solution(const NormalEquations& eq) {
  return detail::spd_solve(eq.gram, eq.xty, "least squares");
}

inline FitResult fit_least_squares(const NormalEquations& eq) {
  return FitResult::from(least_squares_solution(eq));
}

inline FitResult fit_least_squares(const Matrix& x, const Vector& y) {
  return fit_least_squares(NormalEquations::from_data(x, y));
}

/// 0.5 ||y - X theta||^2 + n sum_j p_lambda(|theta_j|).
inline double scad_objective(const NormalEquations& eq, const Vector& theta, const ScadParams& p) {
  double pen = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) pen += scad_penalty(std::abs(theta(j)), p);
  return 0.5 * eq.rss(theta) + eq.n * pen;
}

namespace detail {

enum class ScadRegion : std::uint8_t { Linear, Quadratic, Flat };

inline ScadRegion scad_region(double t, const ScadParams& p) {
  if (t <= p.lambda) return ScadRegion::Linear;
  if (t <= p.a * p.lambda) return ScadRegion::Quadratic;
  return ScadRegion::Flat;
}

/// Exact stationary point of the SCAD objective on the support of `start`.
///
/// On a fixed support with fixed signs and fixed penalty regions the
/// stationarity conditions are linear. The system is re-solved while signs
/// flip (those coordinates are dropped) or regions change. Returns false if
/// no consistent solution is found.
inline bool scad_active_set_solve(const NormalEquations& eq, const ScadParams& p, const Vector& start,
                                  Vector& out) {
  const int k = eq.k();
  const double n = eq.n;
  std::vector<int> active = support(start);
  Vector current = start;
  for (int round = 0; round < 2 * k + 4; ++round) {
    if (active.empty()) {
      out = Vector::Zero(k);
      return true;
    }
    const auto s = static_cast<Eigen::Index>(active.size());
    Matrix h = sub_matrix(eq.gram, active);
    Vector rhs = sub_vector(eq.xty, active);
    std::vector<ScadRegion> region(active.size());
    for (Eigen::Index i = 0; i < s; ++i) {
      const double v = current(active[i]);
      const double sgn = v < 0.0 ? -1.0 : 1.0;
      region[i] = scad_region(std::abs(v), p);
      if (region[i] == ScadRegion::Linear) {
        rhs(i) -= n * p.lambda * sgn;
      } else if (region[i] == ScadRegion::Quadratic) {
        h(i, i) -= n / (p.a - 1.0);
        rhs(i) -= n * p.a * p.lambda * sgn / (p.a - 1.0);
      }
    }
    // Without quadratic-region coordinates h is a Gram block, so the
    // Cholesky path reproduces least squares exactly on a full flat support.
    const bool spd = std::none_of(region.begin(), region.end(),
                                  [](ScadRegion r) { return r == ScadRegion::Quadratic; });
    Vector x;
    if (spd) {
      Eigen::LLT<Matrix> llt(h);
      if (llt.info() != Eigen::Success) return false;
      x = llt.solve(rhs);
    } else {
      Eigen::FullPivLU<Matrix> lu(h);
      if (!lu.isInvertible()) return false;
      x = lu.solve(rhs);
    }
    if (!x.allFinite()) return false;

    std::vector<int> kept;
    bool regions_changed = false;
    Vector next = Vector::Zero(k);
    for (Eigen::Index i = 0; i < s; ++i) {
      const double before = current(active[i]);
      if (x(i) == 0.0 || (x(i) < 0.0) != (before < 0.0)) continue;  // sign flip: drop
      kept.push_back(active[i]);
      next(active[i]) = x(i);
      if (scad_region(std::abs(x(i)), p) != region[i]) regions_changed = true;
    }
    const bool dropped = kept.size() != active.size();
    active = std::move(kept);
    current = std::move(next);
    if (!dropped && !regions_changed) {
      out = current;
      return true;
    }
  }
  return false;
}

}  // namespace detail

namespace detail {

/// LQA iterations with working storage bounded by MaxK (Eigen::Dynamic for
/// unbounded), so small problems run without heap traffic.
template <int MaxK>
Vector lqa_iterate(const NormalEquations& eq, const ScadParams& p, const SolverOptions& opts, Vector theta,
                   int& iterations, bool& converged) {
  using WorkMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, MaxK, MaxK>;
  using WorkVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, MaxK, 1>;
  const int k = eq.k();
  const double n = eq.n;
  std::vector<int> active;
  active.reserve(static_cast<std::size_t>(k));
  WorkMatrix m;
  WorkVector rhs;
  Eigen::LLT<WorkMatrix> llt;
  Vector next(k);
  iterations = 0;
  converged = false;
  while (iterations < opts.max_iter) {
    ++iterations;
    active.clear();
    for (int j = 0; j < k; ++j) {
      if (theta(j) != 0.0) active.push_back(j);
    }
    next.setZero();
    const auto s = static_cast<Eigen::Index>(active.size());
    if (s > 0) {
      m.resize(s, s);
      rhs.resize(s);
      for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = 0; j < s; ++j) m(i, j) = eq.gram(active[i], active[j]);
        const double t = std::abs(theta(active[i]));
        m(i, i) += n * scad_derivative(t, p) / t;
        rhs(i) = eq.xty(active[i]);
      }
      llt.compute(m);
      if (llt.info() != Eigen::Success) throw SingularDesign("fit_scad_lqa: design is rank deficient");
      const WorkVector sol = llt.solve(rhs);
      for (Eigen::Index i = 0; i < s; ++i) {
        const double v = sol(i);
        next(active[i]) = std::abs(v) < opts.zero_tol ? 0.0 : v;
      }
    }
    const double step = (next - theta).template lpNorm<Eigen::Infinity>();
    theta.swap(next);
    if (step < opts.tol) {
      converged = true;
      break;
    }
  }
  return theta;
}

}  // namespace detail

/// SCAD fit by local quadratic approximation.
///
/// Starting from least squares, iterates theta <- (X'X + n D)^{-1} X'y with
/// D = diag(p'(|theta_j|) / |theta_j|) on the active coordinates. Coordinates
/// whose magnitude drops below zero_tol are set to exactly zero and removed
/// for good. The iterate sequence never increases the objective.
inline FitResult fit_scad_lqa(const NormalEquations& eq, const ScadParams& p,
                              const SolverOptions& opts = {}) {
  p.validate();
  const Vector ls = least_squares_solution(eq);
  if (p.lambda == 0.0) return FitResult::from(ls, 0.0, 0, true);

  Vector theta = ls;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (std::abs(theta(j)) < opts.zero_tol) theta(j) = 0.0;
  }
  int iterations = 0;
  bool converged = false;
  theta = eq.k() <= 16 ? detail::lqa_iterate<16>(eq, p, opts, std::move(theta), iterations, converged)
                       : detail::lqa_iterate<Eigen::Dynamic>(eq, p, opts, std::move(theta), iterations, converged);

  double value = scad_objective(eq, theta, p);
  if (opts.polish) {
    Vector polished;
    if (detail::scad_active_set_solve(eq, p, theta, polished)) {
      const double polished_value = scad_objective(eq, polished, p);
      if (polished_value <= value + 1e-12 * std::max(1.0, std::abs(value))) {
        theta = std::move(polished);
        value = polished_value;
        converged = true;
      }
    }
  }
  if (value > scad_objective(eq, ls, p)) theta = ls;
  return FitResult::from(std::move(theta), p.lambda, iterations, converged);
}

inline FitResult fit_scad_lqa(const Matrix& x, const Vector& y, const ScadParams& p,
                              const SolverOptions& opts = {}) {
  return fit_scad_lqa(NormalEquations::from_data(x, y), p, opts);
}

/// SCAD fit by cyclic coordinate descent from the least-squares start.
///
/// Each coordinate is minimized exactly given the others: with the partial
/// residual z_j = (x_j'y - sum_{l != j} G_jl theta_l) / G_jj the update is the
/// weighted univariate SCAD minimizer with weight n / G_jj, which is
/// scad_univariate_min on standardized columns (G_jj = n).
inline FitResult fit_scad_cd(const NormalEquations& eq, const ScadParams& p,
                             const SolverOptions& opts = {.tol = 1e-10, .max_iter = 10000}) {
  p.validate();
  const Vector ls = least_squares_solution(eq);
  if (p.lambda == 0.0) return FitResult::from(ls, 0.0, 0, true);

  const int k = eq.k();
  const double n = eq.n;
  Vector theta = ls;
  Vector g_theta = eq.gram * theta;
  int sweeps = 0;
  bool converged = false;
  while (sweeps < opts.max_iter) {
    ++sweeps;
    double step = 0.0;
    for (int j = 0; j < k; ++j) {
      const double gjj = eq.gram(j, j);
      const double old = theta(j);
      const double z = (eq.xty(j) - g_theta(j) + gjj * old) / gjj;
      const double updated = scad_weighted_min(z, p, n / gjj);
      if (updated != old) {
        g_theta += eq.gram.col(j) * (updated - old);
        theta(j) = updated;
        step = std::max(step, std::abs(updated - old));
      }
    }
    if (step < opts.tol) {
      converged = true;
      break;
    }
  }
  return FitResult::from(std::move(theta), p.lambda, sweeps, converged);
}

inline FitResult fit_scad_cd(const Matrix& x, const Vector& y, const ScadParams& p,
                             const SolverOptions& opts = {.tol = 1e-10, .max_iter = 10000}) {
  return fit_scad_cd(NormalEquations::from_data(x, y), p, opts);
}

/// Componentwise hard thresholding of least squares: coordinate j is kept iff
/// |theta_LS,j| > n^{-exponent} * se_j * sqrt(n), with se_j the usual standard
/// error from the full fit. exponent = 1/4 is the Hodges threshold.
inline FitResult fit_hard_threshold(const NormalEquations& eq, double exponent = 0.25) {
  detail::require(exponent > 0.0 && exponent < 0.5, "fit_hard_threshold: exponent must be in (0, 1/2)");
  const int k = eq.k();
  detail::require(eq.n > k, "fit_hard_threshold: need n > k for standard errors");
  Eigen::LLT<Matrix> llt(eq.gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw SingularDesign("fit_hard_threshold: design is rank deficient");
  }
  Vector theta = llt.solve(eq.xty);
  const Matrix gram_inv = llt.solve(Matrix::Identity(k, k));
  const double n = eq.n;
  const double sigma = std::sqrt(eq.rss(theta) / (n - k));
  const double factor = std::pow(n, -exponent) * std::sqrt(n);
  for (int j = 0; j < k; ++j) {
    const double se = sigma * std::sqrt(gram_inv(j, j));
    if (!(std::abs(theta(j)) > factor * se)) theta(j) = 0.0;
  }
  return FitResult::from(std::move(theta));
}

inline FitResult fit_hard_threshold(const Matrix& x, const Vector& y, double exponent = 0.25) {
  return fit_hard_threshold(NormalEquations::from_data(x, y), exponent);
}

/// Hodges' estimator: the sample mean, set to zero unless it exceeds n^{-1/4}.
inline double hodges_scalar(double ybar, int n) {
  detail::require(n >= 1, "hodges_scalar: n must be positive");
  return std::abs(ybar) > std::pow(static_cast<double>(n), -0.25) ? ybar : 0.0;
}

/// Hodges' estimator on a one-regressor model, applied to the LS coefficient.
inline FitResult fit_hodges(const NormalEquations& eq) {
  detail::require(eq.k() == 1, "fit_hodges: scalar model (k = 1) required");
  Vector theta = least_squares_solution(eq);
  theta(0) = hodges_scalar(theta(0), eq.n);
  return FitResult::from(std::move(theta));
}

/// Restricted least squares on the coordinates set in `mask`.
inline Vector restricted_least_squares(const NormalEquations& eq, std::uint32_t mask) {
  std::vector<int> idx;
  for (int j = 0; j < eq.k(); ++j) {
    if (mask & (1u << j)) idx.push_back(j);
  }
  Vector theta = Vector::Zero(eq.k());
  if (idx.empty()) return theta;
  const Vector sub = detail::spd_solve(detail::sub_matrix(eq.gram, idx), detail::sub_vector(eq.xty, idx),
                                       "restricted least squares");
  for (std::size_t i = 0; i < idx.size(); ++i) theta(idx[i]) = sub(static_cast<Eigen::Index>(i));
  return theta;
}

inline constexpr int kMaxBicDimension = 20;

/// All-subsets post-model-selection estimator minimizing
/// n log(RSS/n) + log(n) * (#nonzero). Ties go to the sparser model, then to
/// the lexicographically smaller pattern.
inline FitResult fit_bic_select(const NormalEquations& eq) {
  const int k = eq.k();
  detail::require(k <= kMaxBicDimension, "fit_bic_select: k too large for all-subsets enumeration");
  const double n = eq.n;
  // Exact fits differ only by rounding; flooring RSS makes them tie.
  const double floor = std::max(1e-12 * eq.yty, std::numeric_limits<double>::min());

  // Lexicographic order on patterns (bit 0 = coordinate 1 first).
  auto lex_less = [k](std::uint32_t a, std::uint32_t b) {
    for (int j = 0; j < k; ++j) {
      const bool ba = a & (1u << j);
      const bool bb = b & (1u << j);
      if (ba != bb) return bb;
    }
    return false;
  };

  std::uint32_t best_mask = 0;
  int best_size = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t total = 1u << k;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    const Vector theta = restricted_least_squares(eq, mask);
    const double rss = std::max(eq.rss(theta), floor);
    const int size = std::popcount(mask);
    const double bic = n * std::log(rss / n) + std::log(n) * size;
    const bool better = bic < best ||
                        (bic == best && (size < best_size || (size == best_size && lex_less(mask, best_mask))));
    if (better) {
      best = bic;
      best_mask = mask;
      best_size = size;
    }
  }
  return FitResult::from(restricted_least_squares(eq, best_mask));
}

inline FitResult fit_bic_select(const Matrix& x, const Vector& y) {
  return fit_bic_select(NormalEquations::from_data(x, y));
}

}  // namespace sparse_risk
