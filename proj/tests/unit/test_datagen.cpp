#include "sparse_risk/datagen.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sparse_risk;

TEST(Ar1Covariance, SmallExample) {
  Matrix expected(3, 3);
  expected << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
  EXPECT_TRUE(ar1_covariance(3, 0.5).isApprox(expected, 1e-15));
}

TEST(Ar1Covariance, ZeroCorrelationIsIdentity) {
  EXPECT_TRUE(ar1_covariance(4, 0.0).isIdentity(0.0));
}

TEST(Ar1Covariance, TraceOfInverse) {
  // The AR(1) precision matrix is tridiagonal with diagonal
  // (1, 1 + rho^2, ..., 1 + rho^2, 1) / (1 - rho^2).
  const double rho = 0.5;
  const int k = 8;
  const double oracle = (2.0 + (k - 2) * (1.0 + rho * rho)) / (1.0 - rho * rho);
  EXPECT_NEAR(oracle, 38.0 / 3.0, 1e-14);
  EXPECT_NEAR(ar1_covariance(k, rho).inverse().trace(), oracle, 1e-12);
}

TEST(Ar1Covariance, PositiveDefinite) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(ar1_covariance(8, 0.5));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Ar1Covariance, RejectsBadArguments) {
  EXPECT_THROW(ar1_covariance(0, 0.5), InvalidParameter);
  EXPECT_THROW(ar1_covariance(3, 1.0), InvalidParameter);
  EXPECT_THROW(ar1_covariance(3, -1.2), InvalidParameter);
}

TEST(DesignSpec, FixedMatrixPassesThrough) {
  Matrix x(4, 2);
  x << 1, 0, 0, 1, 1, 0, 0, 1;
  const auto spec = DesignSpec::fixed(x);
  RngStream s(1, {0, StreamPurpose::Design, 0});
  EXPECT_EQ(sample_design(spec, s), x);
}

TEST(DesignSpec, RankDeficientFixedMatrixIsRejected) {
  Matrix x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(DesignSpec::fixed(x), SingularDesign);
}

TEST(DesignSpec, InvalidGaussianSpec) {
  EXPECT_THROW(DesignSpec::gaussian_ar(0, 8, 0.5), InvalidParameter);
  EXPECT_THROW(DesignSpec::gaussian_ar(10, 8, 1.0), InvalidParameter);
}

TEST(SampleDesign, LargeSampleCorrelation) {
  const auto spec = DesignSpec::gaussian_ar(10000, 8, 0.5);
  RngStream s(7, {0, StreamPurpose::Design, 0});
  const Matrix x = sample_design(spec, s);
  const double c12 = x.col(0).dot(x.col(1)) / 10000.0;
  EXPECT_NEAR(c12, 0.5, 0.05);
}

TEST(SampleDesign, EmpiricalCovarianceConverges) {
  const int n = 100000;
  const auto spec = DesignSpec::gaussian_ar(n, 8, 0.5);
  RngStream s(8, {0, StreamPurpose::Design, 0});
  const Matrix x = sample_design(spec, s);
  const Matrix emp = x.transpose() * x / static_cast<double>(n);
  EXPECT_LT((emp - ar1_covariance(8, 0.5)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleDesign, Deterministic) {
  const auto spec = DesignSpec::gaussian_ar(30, 8, 0.5);
  RngStream a(3, {2, StreamPurpose::Design, 0});
  RngStream b(3, {2, StreamPurpose::Design, 0});
  EXPECT_EQ(sample_design(spec, a), sample_design(spec, b));
}

TEST(SampleErrors, EmptySampleRejected) {
  RngStream s(1, {0, StreamPurpose::Errors, 0});
  EXPECT_THROW(sample_errors(0, s), InvalidParameter);
}

TEST(SampleErrors, LargeSampleMean) {
  RngStream s(1, {0, StreamPurpose::Errors, 0});
  EXPECT_NEAR(sample_errors(1000000, s).mean(), 0.0, 0.01);
}

TEST(SampleErrors, Deterministic) {
  RngStream a(4, {9, StreamPurpose::Errors, 0});
  RngStream b(4, {9, StreamPurpose::Errors, 0});
  EXPECT_EQ(sample_errors(100, a), sample_errors(100, b));
}

TEST(MomentMatchedDesign, GramIsExact) {
  const Matrix sigma = ar1_covariance(8, 0.5);
  RngStream s(5, {0, StreamPurpose::FixedDesign, 0});
  const Matrix x = moment_matched_design(60, sigma, s);
  EXPECT_LT((x.transpose() * x - 60.0 * sigma).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MakeTheta, GammaZeroIsTheta0) {
  const Vector eta = Vector::Ones(8);
  const ParameterPath path{test_support::setup_theta0(), eta, {0.0}, 60};
  EXPECT_EQ(make_theta(path, 0.0), test_support::setup_theta0());
}

TEST(MakeTheta, ComponentValues) {
  Vector eta(8);
  eta << 0, 0, 1, 1, 0, 1, 1, 1;
  ParameterPath path{test_support::setup_theta0(), eta, {8.0}, 60};
  EXPECT_NEAR(make_theta(path, 8.0)(2), 1.03280, 1e-5);
  path.n = 960;
  EXPECT_NEAR(make_theta(path, 8.0)(2), 0.25820, 1e-5);
}

TEST(MakeTheta, DisplacementProportionalToEta) {
  std::mt19937_64 gen(12);
  const Vector theta0 = test_support::gaussian_vector(8, gen);
  const Vector eta = test_support::gaussian_vector(8, gen);
  for (int n : {60, 240, 960}) {
    for (double g : {0.5, 3.0, 40.0}) {
      const ParameterPath path{theta0, eta, {g}, n};
      const Vector d = make_theta(path, g) - theta0;
      EXPECT_LT((d - g / std::sqrt(double(n)) * eta).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(MakeTheta, RejectsNegativeGammaAndSizeMismatch) {
  const ParameterPath path{test_support::setup_theta0(), Vector::Ones(8), {0.0}, 60};
  EXPECT_THROW(make_theta(path, -1.0), InvalidParameter);
  const ParameterPath bad{test_support::setup_theta0(), Vector::Ones(7), {0.0}, 60};
  EXPECT_THROW(make_theta(bad, 1.0), DimensionMismatch);
}

TEST(ParameterPath, GridMustIncrease) {
  const ParameterPath path{test_support::setup_theta0(), Vector::Ones(8), {0.0, 2.0, 1.0}, 60};
  EXPECT_THROW(path.validate(), InvalidParameter);
}

TEST(EquidistantGrid, EndpointsAndSpacing) {
  const auto g = equidistant_grid(0.0, 8.0, 101);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 8.0);
  EXPECT_NEAR(g[50], 4.0, 1e-15);
  EXPECT_NEAR(g[1] - g[0], 0.08, 1e-15);
}

TEST(LoadMatrixCsv, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "sparse_risk_design_test.csv";
  {
    std::ofstream f(path);
    f << "1,2\n3,4.5\n-1,0\n";
  }
  const Matrix m = load_matrix_csv(path.string());
  std::filesystem::remove(path);
  Matrix expected(3, 2);
  expected << 1, 2, 3, 4.5, -1, 0;
  EXPECT_EQ(m, expected);
}

TEST(LoadMatrixCsv, MissingFile) {
  EXPECT_THROW(load_matrix_csv("/nonexistent/design.csv"), InvalidParameter);
}
