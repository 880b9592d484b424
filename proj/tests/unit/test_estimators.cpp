#include "sparse_risk/datagen.hpp"
#include "sparse_risk/estimators.hpp"
#include "sparse_risk/rng.hpp"
#include "sparse_risk/tuning.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace sparse_risk;
using test_support::gaussian_matrix;
using test_support::gaussian_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Normal equations for X'X = nI with least-squares coordinates z.
NormalEquations orthonormal_equations(int n, const Vector& z, std::mt19937_64& gen) {
  const Matrix x = test_support::orthonormal_design(n, static_cast<int>(z.size()), gen);
  NormalEquations eq = NormalEquations::from_data(x, Vector::Zero(n));
  eq.xty = n * z;
  eq.yty = eq.xty.squaredNorm() / n + 1.0;
  return eq;
}

}  // namespace

TEST(SparsityPattern, Examples) {
  const auto p = sparsity_pattern(test_support::setup_theta0());
  EXPECT_EQ(p.bits, (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0, 0, 0}));
  EXPECT_TRUE(sparsity_pattern(Vector::Zero(5)).all_zero());
  EXPECT_EQ(sparsity_pattern(Vector::Ones(5)).count(), 5u);
}

TEST(SparsityPattern, SubsetOf) {
  const auto truth = sparsity_pattern(vec({1, 0, 2}));
  EXPECT_TRUE(sparsity_pattern(vec({3, 0, 0})).subset_of(truth));
  EXPECT_FALSE(sparsity_pattern(vec({3, 1, 0})).subset_of(truth));
  EXPECT_THROW(sparsity_pattern(vec({1})).subset_of(truth), DimensionMismatch);
}

TEST(LeastSquares, NoiselessRecoversTruth) {
  std::mt19937_64 gen(1);
  const Matrix x = gaussian_matrix(40, 6, gen);
  const Vector theta = gaussian_vector(6, gen);
  EXPECT_LT((fit_least_squares(x, x * theta).theta_hat - theta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LeastSquares, OrthonormalDesignIsScaledProjection) {
  std::mt19937_64 gen(2);
  const int n = 50;
  const Matrix x = test_support::orthonormal_design(n, 5, gen);
  const Vector y = gaussian_vector(n, gen);
  const Vector generic = x.colPivHouseholderQr().solve(y);
  const Vector fit = fit_least_squares(x, y).theta_hat;
  EXPECT_LT((fit - x.transpose() * y / n).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((fit - generic).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LeastSquares, SquareSystemIsExactSolve) {
  std::mt19937_64 gen(3);
  const Matrix x = gaussian_matrix(5, 5, gen);
  const Vector y = gaussian_vector(5, gen);
  const Vector theta = fit_least_squares(x, y).theta_hat;
  EXPECT_LT((x * theta - y).norm(), 1e-9);
}

TEST(LeastSquares, RankDeficientDesignThrows) {
  Matrix x(6, 2);
  x.col(0) = Vector::LinSpaced(6, 1, 6);
  x.col(1) = 2 * x.col(0);
  EXPECT_THROW(fit_least_squares(x, Vector::Ones(6)), SingularDesign);
}

TEST(ScadLqa, LambdaZeroIsLeastSquares) {
  std::mt19937_64 gen(4);
  const Matrix x = gaussian_matrix(60, 8, gen);
  const Vector y = gaussian_vector(60, gen);
  EXPECT_EQ(fit_scad_lqa(x, y, ScadParams{0.0, 3.7}).theta_hat, fit_least_squares(x, y).theta_hat);
}

TEST(ScadCd, LambdaZeroIsLeastSquares) {
  std::mt19937_64 gen(5);
  const Matrix x = gaussian_matrix(60, 8, gen);
  const Vector y = gaussian_vector(60, gen);
  EXPECT_LT((fit_scad_cd(x, y, ScadParams{0.0, 3.7}).theta_hat - fit_least_squares(x, y).theta_hat)
                .cwiseAbs()
                .maxCoeff(),
            1e-8);
}

TEST(ScadSolvers, OrthonormalDesignMatchesUnivariateOracle) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_lqa = 0.0, worst_cd = 0.0;
  for (int c = 0; c < 500; ++c) {
    const double lambda = 0.1 + 1.9 * u(gen);
    const ScadParams p{lambda, 3.7};
    Vector z(8);
    for (int j = 0; j < 8; ++j) z(j) = (2 * u(gen) - 1) * 3 * 3.7 * lambda;
    const NormalEquations eq = orthonormal_equations(60, z, gen);
    const Vector lqa = fit_scad_lqa(eq, p).theta_hat;
    const Vector cd = fit_scad_cd(eq, p).theta_hat;
    for (int j = 0; j < 8; ++j) {
      const double target = scad_univariate_min(z(j), p);
      worst_lqa = std::max(worst_lqa, std::abs(lqa(j) - target));
      worst_cd = std::max(worst_cd, std::abs(cd(j) - target));
    }
  }
  EXPECT_LT(worst_lqa, 1e-6);
  EXPECT_LT(worst_cd, 1e-6);
}

TEST(ScadSolvers, CoordinateDescentAgreesWithLqaInObjective) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vector theta0 = test_support::setup_theta0();
  for (int c = 0; c < 100; ++c) {
    const Matrix x = test_support::ar_design(60, 8, 0.5, gen);
    const Vector y = x * theta0 + gaussian_vector(60, gen);
    const auto eq = NormalEquations::from_data(x, y);
    const ScadParams p{(0.9 + 1.1 * u(gen)) * sigma_hat(eq) / std::sqrt(60.0), 3.7};
    const double lqa = scad_objective(eq, fit_scad_lqa(eq, p).theta_hat, p);
    const double cd = scad_objective(eq, fit_scad_cd(eq, p).theta_hat, p);
    EXPECT_NEAR(lqa, cd, 1e-4) << "instance " << c;
  }
}

TEST(ScadLqa, ObjectiveNeverAboveLeastSquaresStart) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 200; ++c) {
    const Matrix x = test_support::ar_design(60, 8, 0.5, gen);
    const Vector y = x * test_support::setup_theta0() + gaussian_vector(60, gen);
    const auto eq = NormalEquations::from_data(x, y);
    const ScadParams p{0.05 + 0.5 * u(gen), 3.7};
    const auto fit = fit_scad_lqa(eq, p);
    EXPECT_LE(scad_objective(eq, fit.theta_hat, p), scad_objective(eq, least_squares_solution(eq), p) + 1e-12);
    EXPECT_EQ(fit.pattern, sparsity_pattern(fit.theta_hat));
  }
}

TEST(ScadSolvers, PermutationEquivariant) {
  std::mt19937_64 gen(9);
  const Matrix x = test_support::ar_design(60, 8, 0.5, gen);
  const Vector y = x * test_support::setup_theta0() + gaussian_vector(60, gen);
  std::vector<int> perm = {5, 2, 7, 0, 3, 1, 6, 4};
  Matrix xp(60, 8);
  for (int j = 0; j < 8; ++j) xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
  const ScadParams p{0.15, 3.7};
  const Vector a = fit_scad_lqa(x, y, p).theta_hat;
  const Vector b = fit_scad_lqa(xp, y, p).theta_hat;
  const Vector c = fit_scad_cd(x, y, p).theta_hat;
  const Vector d = fit_scad_cd(xp, y, p).theta_hat;
  const Vector h = fit_hard_threshold(x, y).theta_hat;
  const Vector hp = fit_hard_threshold(xp, y).theta_hat;
  for (int j = 0; j < 8; ++j) {
    const int src = perm[static_cast<std::size_t>(j)];
    EXPECT_NEAR(b(j), a(src), 1e-8);
    EXPECT_NEAR(d(j), c(src), 1e-8);
    EXPECT_NEAR(hp(j), h(src), 1e-10);
  }
}

// Zero coordinates of theta0 at n = 60 with lambda = sigma_hat / sqrt(60),
// pooled over the five zero coordinates and 500 seeded replications.
TEST(ScadLqa, ZeroCoordinatesAreFoundAtTheta0) {
  const int n = 60, reps = 500;
  const Vector theta0 = test_support::setup_theta0();
  const auto design = DesignSpec::gaussian_ar(n, 8, 0.5);
  int zeros = 0;
  for (int r = 0; r < reps; ++r) {
    RngStream xs(1, {static_cast<std::uint64_t>(r), StreamPurpose::Design, 0});
    RngStream es(1, {static_cast<std::uint64_t>(r), StreamPurpose::Errors, 0});
    const Matrix x = sample_design(design, xs);
    const auto eq = NormalEquations::from_data(x, x * theta0 + sample_errors(n, es));
    const auto fit = fit_scad_lqa(eq, ScadParams{sigma_hat(eq) / std::sqrt(60.0), 3.7});
    for (int j : {2, 3, 5, 6, 7}) zeros += fit.theta_hat(j) == 0.0 ? 1 : 0;
  }
  EXPECT_GE(zeros / (5.0 * reps), 0.80);
}

TEST(HardThreshold, LargeCoefficientsSurvive) {
  std::mt19937_64 gen(10);
  const Matrix x = gaussian_matrix(100, 4, gen);
  const Vector theta = vec({20, -15, 30, 12});
  const auto fit = fit_hard_threshold(x, x * theta + 0.1 * gaussian_vector(100, gen));
  EXPECT_EQ(fit.pattern.count(), 4u);
}

TEST(HardThreshold, ZeroResponseGivesZero) {
  std::mt19937_64 gen(11);
  const Matrix x = gaussian_matrix(30, 3, gen);
  const auto fit = fit_hard_threshold(x, Vector::Zero(30));
  EXPECT_TRUE(fit.pattern.all_zero());
  EXPECT_EQ(fit.theta_hat, Vector::Zero(3));
}

TEST(HardThreshold, ScalarHodgesThreshold) {
  // X = ones, n = 16: se * sqrt(n) equals sigma_hat, made 1 by residuals with
  // mean 0 and sum of squares n - 1 = 15. Threshold 16^{-1/4} = 0.5.
  const int n = 16;
  Vector r(n);
  for (int i = 0; i < n; ++i) r(i) = (i % 2 == 0) ? 1.0 : -1.0;
  r *= std::sqrt(15.0 / 16.0);
  const Matrix x = Matrix::Ones(n, 1);
  EXPECT_EQ(fit_hard_threshold(x, Vector::Constant(n, 0.3) + r).theta_hat(0), 0.0);
  EXPECT_NEAR(fit_hard_threshold(x, Vector::Constant(n, 0.6) + r).theta_hat(0), 0.6, 1e-12);
}

TEST(HardThreshold, NeedsResidualDegreesOfFreedom) {
  const Matrix x = Matrix::Identity(3, 3);
  EXPECT_THROW(fit_hard_threshold(x, Vector::Ones(3)), InvalidParameter);
}

TEST(HodgesScalar, Examples) {
  EXPECT_EQ(hodges_scalar(2.0, 16), 2.0);
  EXPECT_EQ(hodges_scalar(0.3, 16), 0.0);
  EXPECT_EQ(hodges_scalar(0.5, 16), 0.0);
  EXPECT_EQ(hodges_scalar(-0.51, 16), -0.51);
}

TEST(HodgesFit, ScalarModelOnly) {
  const Matrix x = Matrix::Ones(16, 1);
  EXPECT_EQ(fit_hodges(NormalEquations::from_data(x, Vector::Constant(16, 2.0))).theta_hat(0), 2.0);
  EXPECT_THROW(fit_hodges(NormalEquations::from_data(Matrix::Identity(4, 2), Vector::Ones(4))), InvalidParameter);
}

TEST(BicSelect, NoiselessRecoversPattern) {
  std::mt19937_64 gen(12);
  const Matrix x = gaussian_matrix(200, 6, gen);
  const Vector theta = vec({0, 2.5, 0, -1, 0, 0.7});
  const auto fit = fit_bic_select(x, x * theta);
  EXPECT_EQ(fit.pattern, sparsity_pattern(theta));
  EXPECT_LT((fit.theta_hat - theta).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(BicSelect, ZeroResponseGivesEmptyModel) {
  std::mt19937_64 gen(13);
  const Matrix x = gaussian_matrix(50, 5, gen);
  const auto fit = fit_bic_select(x, Vector::Zero(50));
  EXPECT_TRUE(fit.pattern.all_zero());
}

TEST(BicSelect, SingleRegressorIsTwoModelComparison) {
  std::mt19937_64 gen(14);
  for (int c = 0; c < 50; ++c) {
    const int n = 40;
    const Matrix x = gaussian_matrix(n, 1, gen);
    const Vector y = 0.3 * x.col(0) * (c % 3) / 2.0 + gaussian_vector(n, gen);
    const double rss0 = y.squaredNorm();
    const double b = x.col(0).dot(y) / x.col(0).squaredNorm();
    const double rss1 = (y - b * x.col(0)).squaredNorm();
    const bool keep = n * std::log(rss1 / n) + std::log(double(n)) < n * std::log(rss0 / n);
    const auto fit = fit_bic_select(x, y);
    EXPECT_EQ(fit.theta_hat(0) != 0.0, keep);
    if (keep) EXPECT_NEAR(fit.theta_hat(0), b, 1e-12);
  }
}

TEST(Estimators, PatternMatchesEstimate) {
  std::mt19937_64 gen(15);
  const Matrix x = test_support::ar_design(60, 8, 0.5, gen);
  const Vector y = x * test_support::setup_theta0() + gaussian_vector(60, gen);
  const auto eq = NormalEquations::from_data(x, y);
  for (const auto& fit : {fit_least_squares(eq), fit_scad_lqa(eq, {0.2, 3.7}), fit_scad_cd(eq, {0.2, 3.7}),
                          fit_hard_threshold(eq), fit_bic_select(eq)}) {
    EXPECT_EQ(fit.pattern, sparsity_pattern(fit.theta_hat));
  }
}
