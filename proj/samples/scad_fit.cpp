// Draws one sample from the Setup I model at n = 60, fits least squares and
// GCV-tuned SCAD, and prints both estimates next to the truth.

#include "sparse_risk/datagen.hpp"
#include "sparse_risk/estimator_config.hpp"
#include "sparse_risk/experiments.hpp"
#include "sparse_risk/risk.hpp"
#include "sparse_risk/rng.hpp"
#include "sparse_risk/tuning.hpp"

#include <cstdio>

int main() {
  using namespace sparse_risk;
  const int n = 60;
  const Vector theta = default_theta0();
  const auto design = DesignSpec::gaussian_ar(n, 8, 0.5);

  RngStream x_draws(2024, {0, StreamPurpose::Design, 0});
  RngStream e_draws(2024, {0, StreamPurpose::Errors, 0});
  const Matrix x = sample_design(design, x_draws);
  const Vector y = x * theta + sample_errors(n, e_draws);
  const auto eq = NormalEquations::from_data(x, y);

  const FitResult ls = fit_least_squares(eq);
  const double sigma = sigma_hat(eq);
  const GcvResult gcv = gcv_select(eq, 3.7, lambda_grid(LambdaRule{}, n, sigma), ScadSolver::Lqa);

  std::printf("sigma_hat = %.4f, GCV lambda = %.4f\n\n", sigma, gcv.lambda);
  std::printf("%4s %8s %10s %10s\n", "j", "theta", "LS", "SCAD");
  for (int j = 0; j < 8; ++j) {
    std::printf("%4d %8.3f %10.4f %10.4f\n", j + 1, theta(j), ls.theta_hat(j), gcv.fit.theta_hat(j));
  }
  const Matrix sigma_x = design.regressor_covariance();
  std::printf("\nmodel error: LS %.4f, SCAD %.4f\n", model_error(ls.theta_hat, theta, sigma_x),
              model_error(gcv.fit.theta_hat, theta, sigma_x));
}
