#ifndef MOUSTACHE_ESTIMATORS_HPP
#define MOUSTACHE_ESTIMATORS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "regeneration.hpp"
#include "sde.hpp"

namespace moustache {

struct Interval {
  double low;
  double high;
};

/// Wilson score interval for `successes` out of `n` at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

/// Mean with standard error.
struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanEstimate mean_estimate(std::span<const double> xs);

struct TailEstimate {
  std::vector<double> t_grid;
  std::vector<double> p_hat;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double trunc_bias = 0.0;
  std::size_t n = 0;
};

/// Empirical P[T >= t] over the pool with Wilson intervals; the mean cycle
/// err_bound is added to ci_high.
TailEstimate estimate_t_tail(const CyclePool& pool, std::span<const double> t_grid);

/// Empirical P[T <= t] with its Wilson interval.
struct LowerTailEstimate {
  double t = 0.0;
  double p_hat = 0.0;
  Interval ci{0.0, 0.0};
  std::size_t n = 0;
};
LowerTailEstimate estimate_t_lower_tail(const CyclePool& pool, double t);

struct KsReport {
  double d_n = 0.0;
  std::size_t n = 0;
  double threshold = 0.0;
  bool pass = false;
};

/// alpha = 0.01 asymptotic critical value 1.63 / sqrt(n).
double ks_threshold(std::size_t n);

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
KsReport ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct RayleighCheck {
  KsReport ks;
  double t = 0.0;
  double r0 = 0.0;
};

/// KS distance of R(t)/sqrt(t) to the Rayleigh law over n_paths paths
/// integrated in geometric time (path i uses RngStream(cfg.seed, i)).
RayleighCheck rayleigh_limit_check(double r0, double t, std::size_t n_paths, const IntegratorConfig& cfg,
                                   unsigned workers);

/// One X path (kind X) from R(0) = r0 to geometric time s_horizon, built
/// with the hybrid integrator; used for ergodic averages.
TrajectoryGrid simulate_x_path(double r0, double s_horizon, const IntegratorConfig& cfg, RngStream& rng);

/// Trapezoidal time average of f along an X path.
double ergodic_average(const TrajectoryGrid& x_path, const std::function<double(double)>& f);

struct ExitEstimate {
  double estimate = 0.0;
  Interval ci{0.0, 0.0};
  std::size_t n = 0;
};

/// Frequency of hitting b before a from r0 under natural-time integration,
/// with Brownian-bridge crossing detection inside each step.
ExitEstimate exit_prob_mc(double a, double r0, double b, std::size_t n_paths, const IntegratorConfig& cfg,
                          unsigned workers);

struct RdeReport {
  double a_hat = 0.0;
  double a_se = 0.0;
  std::vector<double> t_grid;
  std::vector<double> b_hat;
  double beta0_hat = 0.0;
  std::size_t beta0_index = 0;
  std::size_t n = 0;
};

/// Diagnostics of S_n = alpha_n S_{n-1} + beta_n: a = E ln alpha,
/// b(t) = P(beta > t) ln t, and min over i in (sqrt n, n] of S_i ln_2 i.
RdeReport rde_diagnostics(const RenewalSequence& seq, std::span<const double> t_grid);

struct MomentCheck {
  MeanEstimate inverse_log;   // 1 / ln R(t)
  MeanEstimate second_moment; // R(t)^2
  double inverse_log_stated = 0.0;
  double second_moment_stated = 0.0;
};

/// Monte Carlo of 1/ln R(t) and R(t)^2 from r0 > 1, next to the stated
/// identities E 1/ln R(t) = 1/ln r0 and E R(t)^2 = r0^2 + 2t(1 + 1/ln r0).
/// 1/ln R is only a local martingale: the true means are
/// P(tau > t)/ln r0 and r0^2 + 2t + (2/ln r0) int_0^t P(tau > u) du, with
/// tau the hitting time of the unit circle by planar Brownian motion.
MomentCheck moment_check(double r0, double t, std::size_t n_paths, const IntegratorConfig& cfg,
                         unsigned workers);

/// Endpoint R(t) of one natural-time path (no grid stored).
double simulate_r_endpoint(double r0, double t, const IntegratorConfig& cfg, RngStream& rng);

}  // namespace moustache

#endif
