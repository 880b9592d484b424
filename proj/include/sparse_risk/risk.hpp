#pragma once

#include "sparse_risk/common.hpp"
#include "sparse_risk/datagen.hpp"
#include "sparse_risk/estimator_config.hpp"
#include "sparse_risk/estimators.hpp"
#include "sparse_risk/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace sparse_risk {

#ifndef SPARSE_RISK_VERSION
#define SPARSE_RISK_VERSION "0.1.0"
#endif

inline constexpr const char* kVersion = SPARSE_RISK_VERSION;

/// (theta_hat - theta)' sigma (theta_hat - theta).
inline double model_error(const Vector& theta_hat, const Vector& theta, const Matrix& sigma) {
  detail::require_same_size(theta_hat.size(), theta.size(), "model_error: theta_hat vs theta");
  detail::require_same_size(sigma.rows(), theta.size(), "model_error: sigma rows");
  detail::require_same_size(sigma.cols(), theta.size(), "model_error: sigma cols");
  const Vector d = theta_hat - theta;
  return std::max(d.dot(sigma * d), 0.0);
}

struct LossSpec {
  enum class Kind { ScaledQuadratic, ModelError, AbsCoordinate, Contrast };
  Kind kind = Kind::ScaledQuadratic;
  int coordinate = 0;  ///< AbsCoordinate
  Vector contrast;     ///< Contrast
};

/// Loss of theta_hat at truth theta for a sample of size n. `sigma` is only
/// read by ModelError.
inline double evaluate_loss(const LossSpec& loss, const Vector& theta_hat, const Vector& theta, int n,
                            const Matrix& sigma = Matrix()) {
  detail::require_same_size(theta_hat.size(), theta.size(), "evaluate_loss: theta_hat vs theta");
  const Vector scaled = std::sqrt(static_cast<double>(n)) * (theta_hat - theta);
  switch (loss.kind) {
    case LossSpec::Kind::ScaledQuadratic: return scaled.squaredNorm();
    case LossSpec::Kind::ModelError: return model_error(theta_hat, theta, sigma);
    case LossSpec::Kind::AbsCoordinate:
      detail::require(loss.coordinate >= 0 && loss.coordinate < scaled.size(), "evaluate_loss: bad coordinate");
      return std::abs(scaled(loss.coordinate));
    case LossSpec::Kind::Contrast: {
      detail::require_same_size(loss.contrast.size(), scaled.size(), "evaluate_loss: contrast");
      const double c = loss.contrast.dot(scaled);
      return c * c;
    }
  }
  return 0.0;
}

/// E||theta_LS - theta||^2 = trace(Sigma^{-1}) / (n - 9) = 38 / (3n - 27) for
/// the k = 8, rho = 0.5 Gaussian design.
inline double ls_mse_closed_form(int n) {
  detail::require(n > 9, "ls_mse_closed_form: moment exists only for n > 9");
  return 38.0 / (3.0 * n - 27.0);
}

struct McOptions {
  int replications = 500;
  std::uint64_t master_seed = 1;
  int threads = 1;
  int bootstrap_resamples = 200;
};

/// One (n, gamma, estimator) cell of a risk report.
struct ReportRow {
  std::string setup;
  int n = 0;
  double gamma = 0.0;
  std::string estimator;
  double rel_median_me = 0.0;
  double rel_mse = 0.0;
  double sparsity_rate = 0.0;  ///< fraction with r(theta_hat) <= r(theta)
  double zero_rate = 0.0;      ///< fraction with theta_hat == 0
  double se_median_me = 0.0;   ///< bootstrap SE of rel_median_me (the CSV mc_se)
  double se_mse = 0.0;         ///< bootstrap SE of rel_mse
  double mean_sq_error = 0.0;  ///< MC mean of ||theta_hat - theta||^2
  double se_sq_error = 0.0;
  double mean_me = 0.0;
  int replications = 0;
  int failures = 0;
  int nonconverged = 0;
  std::uint64_t seed = 0;

  double failure_rate() const { return replications > 0 ? double(failures) / replications : 0.0; }
};

inline constexpr double kMaxFailureRate = 0.01;

struct RiskReport {
  std::vector<ReportRow> rows;
  std::uint64_t master_seed = 0;
  int replications = 0;

  bool flagged() const {
    return std::any_of(rows.begin(), rows.end(),
                       [](const ReportRow& r) { return r.failure_rate() > kMaxFailureRate; });
  }
};

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Median; averages the two central values for even sizes. Reorders `v`.
inline double median_inplace(std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double hi = *mid;
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct ReplicationRecord {
  double me = 0.0;
  double sq = 0.0;
  std::uint8_t sparsity_ok = 0;
  std::uint8_t all_zero = 0;
  std::uint8_t failed = 1;
  std::uint8_t converged = 1;
};

/// Runs `body(r)` for r in [0, count) on up to `threads` workers. Each worker
/// owns a contiguous block, so results land in fixed slots.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(count) * w / threads);
    const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / threads);
    workers.emplace_back([&, w, begin, end] {
      try {
        for (int r = begin; r < end; ++r) body(r);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Monte Carlo risk over every gamma of `path`.
///
/// Replication r draws its design from stream (seed, r, Design) and its errors
/// from (seed, r, Errors). The draws are shared by all gammas and all
/// estimators (common random numbers), and only the sufficient statistics
/// X'X, X'e, e'e are kept, so each gamma costs only the fits. Every estimator
/// is compared with full-model least squares on the same sample.
inline std::vector<ReportRow> run_sweep(const DesignSpec& design, const ParameterPath& path,
                                        const std::vector<Estimator>& estimators, const McOptions& opts,
                                        const std::string& setup_label = "custom") {
  design.validate();
  path.validate();
  detail::require(opts.replications >= 1, "run_sweep: need at least one replication");
  detail::require(opts.bootstrap_resamples >= 0, "run_sweep: negative bootstrap count");
  detail::require(!path.gamma_grid.empty(), "run_sweep: empty gamma grid");
  detail::require(path.n == design.n, "run_sweep: path n differs from design n");
  detail::require_same_size(path.theta0.size(), design.k, "run_sweep: parameter dimension vs k");
  for (double g : path.gamma_grid) detail::require(g >= 0.0, "run_sweep: gamma must be nonnegative");

  const int reps = opts.replications;
  const auto n_gamma = path.gamma_grid.size();
  const auto n_est = estimators.size();
  const Matrix sigma = design.regressor_covariance();

  std::vector<Vector> thetas;
  std::vector<SparsityPattern> true_patterns;
  for (double g : path.gamma_grid) {
    thetas.push_back(make_theta(path, g));
    true_patterns.push_back(sparsity_pattern(thetas.back()));
  }

  // [gamma][estimator + 1][replication]; slot 0 is the LS reference.
  const auto slots = n_est + 1;
  std::vector<detail::ReplicationRecord> records(n_gamma * slots * static_cast<std::size_t>(reps));
  auto at = [&](std::size_t g, std::size_t e, int r) -> detail::ReplicationRecord& {
    return records[(g * slots + e) * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
  };

  detail::parallel_for(reps, opts.threads, [&](int r) {
    const auto ru = static_cast<std::uint64_t>(r);
    RngStream design_stream(opts.master_seed, {ru, StreamPurpose::Design, 0});
    RngStream error_stream(opts.master_seed, {ru, StreamPurpose::Errors, 0});
    const Matrix x = sample_design(design, design_stream);
    const Vector e = sample_errors(design.n, error_stream);
    const Matrix gram = x.transpose() * x;
    const Vector xte = x.transpose() * e;
    const double ete = e.squaredNorm();

    auto record = [&](std::size_t g, const Vector& theta_hat, detail::ReplicationRecord& rec) {
      const Vector& theta = thetas[g];
      rec.me = model_error(theta_hat, theta, sigma);
      rec.sq = (theta_hat - theta).squaredNorm();
      const SparsityPattern pattern = sparsity_pattern(theta_hat);
      rec.sparsity_ok = pattern.subset_of(true_patterns[g]) ? 1 : 0;
      rec.all_zero = pattern.all_zero() ? 1 : 0;
      rec.failed = theta_hat.allFinite() ? 0 : 1;
    };

    for (std::size_t g = 0; g < n_gamma; ++g) {
      const Vector& theta = thetas[g];
      NormalEquations eq;
      eq.gram = gram;
      const Vector g_theta = gram * theta;
      eq.xty = g_theta + xte;
      eq.yty = theta.dot(g_theta) + 2.0 * theta.dot(xte) + ete;
      eq.n = design.n;

      try {
        record(g, least_squares_solution(eq), at(g, 0, r));
      } catch (const std::exception&) {
        continue;  // whole replication fails with the reference
      }
      for (std::size_t k = 0; k < n_est; ++k) {
        auto& rec = at(g, k + 1, r);
        try {
          const FitResult fit = estimators[k].fit(eq);
          record(g, fit.theta_hat, rec);
          rec.converged = fit.converged ? 1 : 0;
        } catch (const std::exception&) {
          rec.failed = 1;
        }
      }
    }
  });

  std::vector<ReportRow> rows;
  rows.reserve(n_gamma * n_est);
  for (std::size_t g = 0; g < n_gamma; ++g) {
    for (std::size_t k = 0; k < n_est; ++k) {
      ReportRow row;
      row.setup = setup_label;
      row.n = design.n;
      row.gamma = path.gamma_grid[g];
      row.estimator = estimators[k].name;
      row.replications = reps;
      row.seed = opts.master_seed;

      std::vector<double> ratio, sq, sq_ls;
      double sparse = 0.0, zeros = 0.0, me_sum = 0.0;
      for (int r = 0; r < reps; ++r) {
        const auto& ref = at(g, 0, r);
        const auto& rec = at(g, k + 1, r);
        if (ref.failed || rec.failed) {
          ++row.failures;
          continue;
        }
        if (!rec.converged) ++row.nonconverged;
        ratio.push_back(rec.me == ref.me ? 1.0 : rec.me / ref.me);
        sq.push_back(rec.sq);
        sq_ls.push_back(ref.sq);
        sparse += rec.sparsity_ok;
        zeros += rec.all_zero;
        me_sum += rec.me;
      }
      const auto m = ratio.size();
      if (m == 0) {
        const double nan = std::nan("");
        row.rel_median_me = row.rel_mse = row.sparsity_rate = row.zero_rate = nan;
        row.mean_sq_error = row.mean_me = nan;
        rows.push_back(row);
        continue;
      }
      const double md = static_cast<double>(m);
      double sum_sq = 0.0, sum_sq_ls = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sum_sq += sq[i];
        sum_sq_ls += sq_ls[i];
      }
      {
        std::vector<double> tmp = ratio;
        row.rel_median_me = detail::median_inplace(tmp);
      }
      row.rel_mse = sum_sq == sum_sq_ls ? 1.0 : sum_sq / sum_sq_ls;
      row.sparsity_rate = sparse / md;
      row.zero_rate = zeros / md;
      row.mean_sq_error = sum_sq / md;
      row.se_sq_error = detail::sample_sd(sq) / std::sqrt(md);
      row.mean_me = me_sum / md;

      if (opts.bootstrap_resamples > 0) {
        RngStream boot(opts.master_seed,
                       {k, StreamPurpose::Bootstrap, std::bit_cast<std::uint64_t>(row.gamma)});
        std::vector<double> medians, mses, tmp(m);
        for (int b = 0; b < opts.bootstrap_resamples; ++b) {
          double num = 0.0, den = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = boot.index(m);
            tmp[i] = ratio[j];
            num += sq[j];
            den += sq_ls[j];
          }
          medians.push_back(detail::median_inplace(tmp));
          mses.push_back(num == den ? 1.0 : num / den);
        }
        row.se_median_me = detail::sample_sd(medians);
        row.se_mse = detail::sample_sd(mses);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

/// Risk at a single gamma. Identical to the matching rows of run_sweep with
/// the same seed.
inline std::vector<ReportRow> run_mc(const DesignSpec& design, const ParameterPath& path, double gamma,
                                     const std::vector<Estimator>& estimators, const McOptions& opts,
                                     const std::string& setup_label = "custom") {
  ParameterPath single = path;
  single.gamma_grid = {gamma};
  return run_sweep(design, single, estimators, opts, setup_label);
}

inline const char* kReportColumns = "setup,n,gamma,estimator,rel_median_me,rel_mse,sparsity_rate,mc_se,R,seed";

inline void write_provenance(std::ostream& out, std::uint64_t seed, int replications) {
  out << "# sparse_risk version=" << kVersion << " seed=" << seed << " R=" << replications << '\n';
}

inline void write_report_csv(std::ostream& out, const RiskReport& report) {
  write_provenance(out, report.master_seed, report.replications);
  out << kReportColumns << '\n';
  for (const auto& r : report.rows) {
    out << r.setup << ',' << r.n << ',' << detail::format_number(r.gamma) << ',' << r.estimator << ','
        << detail::format_number(r.rel_median_me) << ',' << detail::format_number(r.rel_mse) << ','
        << detail::format_number(r.sparsity_rate) << ',' << detail::format_number(r.se_median_me) << ','
        << r.replications << ',' << r.seed << '\n';
  }
}

}  // namespace sparse_risk
