#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "laws.hpp"
#include "parallel.hpp"

namespace moustache {

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  require(n > 0, "wilson_interval: n must be positive");
  require(successes <= n, "wilson_interval: successes exceed n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Clamp so the interval always contains p despite rounding.
  return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

MeanEstimate mean_estimate(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorCode::empty_source, "mean_estimate: no samples");
  // Centred on the first sample, so a constant input returns itself exactly.
  const double x0 = xs[0];
  double sum = 0.0;
  for (double x : xs) sum += x - x0;
  const double nn = static_cast<double>(xs.size());
  const double shift = sum / nn;
  double ss = 0.0;
  for (double x : xs) {
    const double d = (x - x0) - shift;
    ss += d * d;
  }
  MeanEstimate out;
  out.mean = x0 + shift;
  out.n = xs.size();
  out.se = xs.size() > 1 ? std::sqrt(ss / (nn - 1.0) / nn) : 0.0;
  return out;
}

TailEstimate estimate_t_tail(const CyclePool& pool, std::span<const double> t_grid) {
  if (pool.empty()) fail(ErrorCode::empty_source, "estimate_t_tail: empty cycle pool");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(std::isfinite(t_grid[i]) && t_grid[i] > 0.0, "estimate_t_tail: grid points must be positive");
    require(i == 0 || t_grid[i] > t_grid[i - 1], "estimate_t_tail: grid must be increasing");
  }
  std::vector<double> times;
  times.reserve(pool.size());
  double bias = 0.0;
  for (const auto& rec : pool.records) {
    times.push_back(rec.T);
    bias += rec.err_bound;
  }
  std::sort(times.begin(), times.end());

  TailEstimate out;
  out.n = pool.size();
  out.trunc_bias = bias / static_cast<double>(out.n);
  for (double t : t_grid) {
    const auto below = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
    const std::size_t hits = out.n - below;
    const Interval ci = wilson_interval(hits, out.n);
    out.t_grid.push_back(t);
    out.p_hat.push_back(static_cast<double>(hits) / static_cast<double>(out.n));
    out.ci_low.push_back(ci.low);
    out.ci_high.push_back(std::min(1.0, ci.high + out.trunc_bias));
  }
  return out;
}

LowerTailEstimate estimate_t_lower_tail(const CyclePool& pool, double t) {
  if (pool.empty()) fail(ErrorCode::empty_source, "estimate_t_lower_tail: empty cycle pool");
  require(std::isfinite(t) && t > 0.0, "estimate_t_lower_tail: t must be positive");
  std::size_t hits = 0;
  for (const auto& rec : pool.records)
    if (rec.T <= t) ++hits;
  LowerTailEstimate out;
  out.t = t;
  out.n = pool.size();
  out.p_hat = static_cast<double>(hits) / static_cast<double>(out.n);
  out.ci = wilson_interval(hits, out.n);
  return out;
}

double ks_threshold(std::size_t n) {
  require(n > 0, "ks_threshold: n must be positive");
  return 1.63 / std::sqrt(static_cast<double>(n));
}

KsReport ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 10) fail(ErrorCode::too_few_samples, "ks_distance: need at least 10 samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double nn = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / nn, static_cast<double>(i + 1) / nn - f});
  }
  KsReport out;
  out.d_n = d;
  out.n = xs.size();
  out.threshold = ks_threshold(out.n);
  out.pass = d < out.threshold;
  return out;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::empty_source, "ks_two_sample: empty sample");
  std::vector<double> xa(a.begin(), a.end());
  std::vector<double> xb(b.begin(), b.end());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double x = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace {

// Limit-law paths never fall back to natural time: the geometric step cap
// already tracks the unit circle.
constexpr HybridLevels kGeometricOnly{1.0, 2.0};

}  // namespace

RayleighCheck rayleigh_limit_check(double r0, double t, std::size_t n_paths, const IntegratorConfig& cfg,
                                   unsigned workers) {
  cfg.validate();
  require(std::isfinite(r0) && r0 >= 1.0, "rayleigh_limit_check: r0 must be >= 1");
  require(std::isfinite(t) && t >= 100.0, "rayleigh_limit_check: t must be >= 100");
  if (n_paths < 1000) fail(ErrorCode::too_few_samples, "rayleigh_limit_check: need at least 1000 paths");
  const double s_end = std::log1p(t);
  std::vector<double> scaled(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    HybridRadialPath path(r0, cfg, kGeometricOnly);
    while (path.advance(rng, s_end)) {
    }
    // R(t)/sqrt(t) = X(s) sqrt((1 + t)/t).
    scaled[i] = path.scaled_value() * std::sqrt((1.0 + t) / t);
  });
  RayleighCheck out;
  out.ks = ks_distance(scaled, rayleigh_cdf);
  out.t = t;
  out.r0 = r0;
  return out;
}

TrajectoryGrid simulate_x_path(double r0, double s_horizon, const IntegratorConfig& cfg, RngStream& rng) {
  cfg.validate();
  require(std::isfinite(r0) && r0 >= 1.0, "simulate_x_path: r0 must be >= 1");
  require(std::isfinite(s_horizon) && s_horizon > 0.0, "simulate_x_path: s_horizon must be positive");
  HybridRadialPath path(r0, cfg, kGeometricOnly);
  TrajectoryGrid grid;
  grid.kind = PathKind::X;
  grid.push(0.0, r0);
  while (path.advance(rng, s_horizon)) {
    const double s = path.geometric_time();
    if (s > grid.times.back()) grid.push(s, path.scaled_value());
  }
  grid.refresh_step_stats();
  return grid;
}

double ergodic_average(const TrajectoryGrid& x_path, const std::function<double(double)>& f) {
  require(x_path.size() >= 2, "ergodic_average: path needs at least two points");
  const double span = x_path.times.back() - x_path.times.front();
  require(span >= 10.0, "ergodic_average: horizon must be >= 10");
  std::vector<double> fx(x_path.size());
  for (std::size_t i = 0; i < fx.size(); ++i) fx[i] = f(x_path.values[i]);
  // Centred on f at the first point, so f == c returns c exactly.
  const double f0 = fx[0];
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i < fx.size(); ++i) {
    const double w = x_path.times[i] - x_path.times[i - 1];
    weighted += 0.5 * w * ((fx[i - 1] - f0) + (fx[i] - f0));
    total += w;
  }
  return f0 + weighted / total;
}

ExitEstimate exit_prob_mc(double a, double r0, double b, std::size_t n_paths, const IntegratorConfig& cfg,
                          unsigned workers) {
  cfg.validate();
  require(a > 1.0 && a < r0 && r0 < b && std::isfinite(b), "exit_prob_mc: need 1 < a < r0 < b");
  if (n_paths < 1000) fail(ErrorCode::too_few_samples, "exit_prob_mc: need at least 1000 paths");
  std::vector<unsigned char> upper(n_paths, 0);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    double r = r0;
    double log_r = std::log(r0);
    for (;;) {
      const auto st = detail::natural_step(r, log_r, cfg.dt_natural, cfg, rng);
      const double y = st.value;
      if (y <= a) return;
      if (y >= b) {
        upper[i] = 1;
        return;
      }
      // Crossing of either barrier by the Brownian bridge between grid points.
      const double p_low = std::exp(-2.0 * (r - a) * (y - a) / st.dt);
      if (p_low > 1e-300 && rng.uniform() < p_low) return;
      const double p_up = std::exp(-2.0 * (b - r) * (b - y) / st.dt);
      if (p_up > 1e-300 && rng.uniform() < p_up) {
        upper[i] = 1;
        return;
      }
      r = y;
      log_r = std::log(r);
    }
  });
  std::size_t hits = 0;
  for (auto u : upper) hits += u;
  ExitEstimate out;
  out.n = n_paths;
  out.estimate = static_cast<double>(hits) / static_cast<double>(n_paths);
  out.ci = wilson_interval(hits, n_paths);
  return out;
}

RdeReport rde_diagnostics(const RenewalSequence& seq, std::span<const double> t_grid) {
  const std::size_t n = seq.n();
  if (n < 1000) fail(ErrorCode::too_few_samples, "rde_diagnostics: need at least 1000 cycles");
  const double log_r = std::log(seq.r);
  std::vector<double> log_alpha(n);
  std::vector<double> log_beta(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_alpha[i] = -2.0 * seq.U[i] * log_r;
    log_beta[i] = seq.lnTp[i] + log_alpha[i];
  }
  RdeReport out;
  out.n = n;
  const auto a = mean_estimate(log_alpha);
  out.a_hat = a.mean;
  out.a_se = a.se;

  std::sort(log_beta.begin(), log_beta.end());
  for (double t : t_grid) {
    require(std::isfinite(t) && t > 1.0, "rde_diagnostics: grid points must exceed 1");
    const double lt = std::log(t);
    const auto upto = std::upper_bound(log_beta.begin(), log_beta.end(), lt) - log_beta.begin();
    const double p = static_cast<double>(n - static_cast<std::size_t>(upto)) / static_cast<double>(n);
    out.t_grid.push_back(t);
    out.b_hat.push_back(p * lt);
  }

  const auto first = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))) + 1;
  out.beta0_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= n; ++i) {
    const double v = std::exp(seq.lnS[i - 1]) * iterated_log(2, static_cast<double>(i));
    if (v < out.beta0_hat) {
      out.beta0_hat = v;
      out.beta0_index = i;
    }
  }
  return out;
}

double simulate_r_endpoint(double r0, double t, const IntegratorConfig& cfg, RngStream& rng) {
  require(std::isfinite(r0) && r0 >= 1.0, "simulate_r_endpoint: r0 must be >= 1");
  require(std::isfinite(t) && t >= 0.0, "simulate_r_endpoint: t must be >= 0");
  double r = detail::entrance_value(r0, cfg);
  double log_r = std::log1p(r - 1.0);
  double u = 0.0;
  while (u < t) {
    const double remaining = t - u;
    const auto st = detail::natural_step(r, log_r, std::min(cfg.dt_natural, remaining), cfg, rng);
    u = st.dt >= remaining ? t : u + st.dt;
    r = st.value;
    log_r = std::log1p(r - 1.0);
  }
  return r;
}

MomentCheck moment_check(double r0, double t, std::size_t n_paths, const IntegratorConfig& cfg,
                         unsigned workers) {
  cfg.validate();
  require(std::isfinite(r0) && r0 > 1.0, "moment_check: r0 must be > 1");
  require(n_paths >= 2, "moment_check: need at least two paths");
  std::vector<double> inv_log(n_paths);
  std::vector<double> square(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const double r = simulate_r_endpoint(r0, t, cfg, rng);
    inv_log[i] = 1.0 / std::log(r);
    square[i] = r * r;
  });
  MomentCheck out;
  out.inverse_log = mean_estimate(inv_log);
  out.second_moment = mean_estimate(square);
  const double lr = std::log(r0);
  out.inverse_log_stated = 1.0 / lr;
  out.second_moment_stated = r0 * r0 + 2.0 * t * (1.0 + 1.0 / lr);
  return out;
}

}  // namespace moustache
