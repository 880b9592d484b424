#pragma once

#include "sparse_risk/common.hpp"
#include "sparse_risk/rng.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sparse_risk {

/// Toeplitz covariance with entries rho^|i-j|.
inline Matrix ar1_covariance(int k, double rho) {
  detail::require(k >= 1, "ar1_covariance: k must be positive");
  detail::require(std::abs(rho) < 1.0, "ar1_covariance: |rho| must be < 1");
  Matrix sigma(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
  }
  return sigma;
}

/// Lower-triangular factor L with sigma = L L'.
inline Matrix covariance_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance_factor: matrix is not positive definite");
  }
  return llt.matrixL();
}

struct DesignSpec {
  enum class Kind { FixedMatrix, GaussianAR };

  Kind kind = Kind::GaussianAR;
  int n = 0;
  int k = 0;
  double rho = 0.0;
  std::optional<Matrix> fixed_matrix;

  static DesignSpec gaussian_ar(int n, int k, double rho) {
    DesignSpec spec{Kind::GaussianAR, n, k, rho, std::nullopt};
    spec.validate();
    return spec;
  }

  static DesignSpec fixed(Matrix x) {
    const auto n = static_cast<int>(x.rows());
    const auto k = static_cast<int>(x.cols());
    DesignSpec spec{Kind::FixedMatrix, n, k, 0.0, std::move(x)};
    spec.validate();
    return spec;
  }

  void validate() const {
    detail::require(n >= 1 && k >= 1, "DesignSpec: n and k must be positive");
    if (kind == Kind::GaussianAR) {
      detail::require(std::abs(rho) < 1.0, "DesignSpec: |rho| must be < 1");
      return;
    }
    detail::require(fixed_matrix.has_value(), "DesignSpec: FixedMatrix needs a matrix");
    detail::require(fixed_matrix->rows() == n && fixed_matrix->cols() == k,
                    "DesignSpec: fixed matrix shape does not match (n, k)");
    detail::require(n >= k, "DesignSpec: FixedMatrix requires n >= k");
    Eigen::ColPivHouseholderQR<Matrix> qr(*fixed_matrix);
    if (qr.rank() < k) throw SingularDesign("DesignSpec: fixed matrix is rank deficient");
  }

  /// Regressor second-moment matrix used by the model error: the population
  /// covariance for random designs, X'X/n for fixed ones.
  Matrix regressor_covariance() const {
    if (kind == Kind::GaussianAR) return ar1_covariance(k, rho);
    return fixed_matrix->transpose() * *fixed_matrix / static_cast<double>(n);
  }
};

/// Draws the n x k design. Random designs are filled row by row, each row
/// being L z with z standard normal.
inline Matrix sample_design(const DesignSpec& spec, RngStream& stream) {
  spec.validate();
  if (spec.kind == DesignSpec::Kind::FixedMatrix) return *spec.fixed_matrix;

  const Matrix factor = covariance_factor(ar1_covariance(spec.k, spec.rho));
  Matrix z(spec.n, spec.k);
  for (int t = 0; t < spec.n; ++t) {
    for (int j = 0; j < spec.k; ++j) z(t, j) = stream.normal();
  }
  return z * factor.transpose();
}

inline Vector sample_errors(int n, RngStream& stream) {
  detail::require(n >= 1, "sample_errors: n must be positive");
  Vector e(n);
  for (int t = 0; t < n; ++t) e(t) = stream.normal();
  return e;
}

/// Fixed design whose Gram matrix is exactly n * sigma. Gaussian draws are
/// orthonormalized and then coloured by the Cholesky factor of sigma.
inline Matrix moment_matched_design(int n, const Matrix& sigma, RngStream& stream) {
  const auto k = static_cast<int>(sigma.rows());
  detail::require(n >= k, "moment_matched_design: n must be >= k");
  Matrix z(n, k);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < k; ++j) z(t, j) = stream.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  return std::sqrt(static_cast<double>(n)) * q * covariance_factor(sigma).transpose();
}

/// Local alternative theta0 + (gamma / sqrt(n)) eta over a grid of gammas.
struct ParameterPath {
  Vector theta0;
  Vector eta;
  std::vector<double> gamma_grid;
  int n = 1;

  void validate() const {
    detail::require_same_size(theta0.size(), eta.size(), "ParameterPath: theta0/eta");
    detail::require(n >= 1, "ParameterPath: n must be positive");
    for (std::size_t i = 1; i < gamma_grid.size(); ++i) {
      detail::require(gamma_grid[i] > gamma_grid[i - 1],
                      "ParameterPath: gamma grid must be strictly increasing");
    }
  }
};

inline Vector make_theta(const ParameterPath& path, double gamma) {
  detail::require_same_size(path.theta0.size(), path.eta.size(), "make_theta: theta0/eta");
  detail::require(gamma >= 0.0, "make_theta: gamma must be nonnegative");
  detail::require(path.n >= 1, "make_theta: n must be positive");
  return path.theta0 + (gamma / std::sqrt(static_cast<double>(path.n))) * path.eta;
}

/// `points` equidistant values from lo to hi, both endpoints included.
inline std::vector<double> equidistant_grid(double lo, double hi, int points) {
  detail::require(points >= 1, "equidistant_grid: need at least one point");
  if (points == 1) return {lo};
  std::vector<double> grid(static_cast<std::size_t>(points));
  const int steps = points - 1;
  for (int i = 0; i <= steps; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / steps;
  return grid;
}

/// Reads a row-major numeric CSV without header.
inline Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("load_matrix_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidParameter("load_matrix_csv: bad number '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidParameter("load_matrix_csv: ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidParameter("load_matrix_csv: no data in " + path);
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return x;
}

}  // namespace sparse_risk
