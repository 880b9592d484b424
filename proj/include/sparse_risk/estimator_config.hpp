#pragma once

#include "sparse_risk/estimators.hpp"
#include "sparse_risk/tuning.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sparse_risk {

struct LeastSquaresConfig {};

/// SCAD with either a fixed lambda or GCV over a lambda rule.
struct ScadConfig {
  double a = 3.7;
  ScadSolver solver = ScadSolver::Lqa;
  std::variant<LambdaRule, double> lambda = LambdaRule{};
  std::optional<SolverOptions> options;
};

struct HardThresholdConfig {
  double exponent = 0.25;
};

struct ScalarHodgesConfig {};
struct BicSelectConfig {};

using EstimatorConfig =
    std::variant<LeastSquaresConfig, ScadConfig, HardThresholdConfig, ScalarHodgesConfig, BicSelectConfig>;

/// A named fitting procedure on sufficient statistics.
struct Estimator {
  std::string name;
  std::function<FitResult(const NormalEquations&)> fit;
};

inline FitResult fit_scad_tuned(const NormalEquations& eq, const ScadConfig& cfg) {
  detail::require(cfg.a > 2.0, "ScadConfig: a must exceed 2");
  if (const double* fixed = std::get_if<double>(&cfg.lambda)) {
    return fit_scad(eq, ScadParams{*fixed, cfg.a}, cfg.solver, cfg.options);
  }
  const auto& rule = std::get<LambdaRule>(cfg.lambda);
  const auto grid = lambda_grid(rule, eq.n, sigma_hat(eq));
  GcvResult sel = gcv_select(eq, cfg.a, grid, cfg.solver, cfg.options);
  sel.fit.converged = sel.fit.converged && sel.converged;
  return std::move(sel.fit);
}

inline std::string default_name(const EstimatorConfig& cfg) {
  struct Namer {
    std::string operator()(const LeastSquaresConfig&) const { return "ls"; }
    std::string operator()(const ScadConfig& c) const {
      return c.solver == ScadSolver::Lqa ? "scad2" : "scad2-cd";
    }
    std::string operator()(const HardThresholdConfig&) const { return "hard"; }
    std::string operator()(const ScalarHodgesConfig&) const { return "hodges"; }
    std::string operator()(const BicSelectConfig&) const { return "bic"; }
  };
  return std::visit(Namer{}, cfg);
}

inline Estimator make_estimator(const EstimatorConfig& cfg, std::string name = {}) {
  if (name.empty()) name = default_name(cfg);
  struct Maker {
    std::function<FitResult(const NormalEquations&)> operator()(const LeastSquaresConfig&) const {
      return [](const NormalEquations& eq) { return fit_least_squares(eq); };
    }
    std::function<FitResult(const NormalEquations&)> operator()(const ScadConfig& c) const {
      detail::require(c.a > 2.0, "ScadConfig: a must exceed 2");
      return [c](const NormalEquations& eq) { return fit_scad_tuned(eq, c); };
    }
    std::function<FitResult(const NormalEquations&)> operator()(const HardThresholdConfig& c) const {
      detail::require(c.exponent > 0.0 && c.exponent < 0.5, "HardThreshold: exponent must be in (0, 1/2)");
      return [c](const NormalEquations& eq) { return fit_hard_threshold(eq, c.exponent); };
    }
    std::function<FitResult(const NormalEquations&)> operator()(const ScalarHodgesConfig&) const {
      return [](const NormalEquations& eq) { return fit_hodges(eq); };
    }
    std::function<FitResult(const NormalEquations&)> operator()(const BicSelectConfig&) const {
      return [](const NormalEquations& eq) { return fit_bic_select(eq); };
    }
  };
  return Estimator{std::move(name), std::visit(Maker{}, cfg)};
}

/// Parses one estimator name as used on the command line. SCAD variants take
/// their lambda rule from `rule`.
inline EstimatorConfig parse_estimator_name(const std::string& name, const LambdaRule& rule) {
  if (name == "ls") return LeastSquaresConfig{};
  if (name == "scad2") return ScadConfig{.solver = ScadSolver::Lqa, .lambda = rule};
  if (name == "scad2-cd") return ScadConfig{.solver = ScadSolver::CoordinateDescent, .lambda = rule};
  if (name == "hard") return HardThresholdConfig{};
  if (name == "bic") return BicSelectConfig{};
  if (name == "hodges") return ScalarHodgesConfig{};
  throw InvalidParameter("unknown estimator '" + name + "' (expected ls, scad2, scad2-cd, hard, bic, hodges)");
}

}  // namespace sparse_risk
