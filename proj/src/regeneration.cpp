#include "regeneration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "error.hpp"
#include "parallel.hpp"

namespace moustache {

namespace {

constexpr double kDipMargin = 0.05;
constexpr std::size_t kMaxModeSwitches = 100000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

void CycleRecord::check_invariants(const CycleLawParams& params) const {
  const double r = params.r;
  require(H > 0.0 && H <= T, "cycle: need 0 < H <= T");
  require(A > 1.0 && A < r, "cycle: need 1 < A < r");
  require(B >= r, "cycle: need B >= r");
  require(k >= 2, "cycle: need k >= 2");
  require(U > 0.0 && U < 1.0 && V >= 1.0 && V <= k, "cycle: need 0 < U < 1 <= V <= k");
  require(err_bound > 0.0 && err_bound < 1.0 / k, "cycle: err_bound outside (0, 1/k)");
}

void CyclePool::check_invariants() const {
  params.validate();
  for (const auto& c : records) {
    require(c.k == k, "cycle pool: records disagree on k");
    c.check_invariants(params);
  }
}

std::string fingerprint(const IntegratorConfig& cfg) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "dt_natural=%.17g;dt_geometric=%.17g;boundary_guard=%.17g;max_halvings=%d;step_scale=%.17g;seed=%llu",
                cfg.dt_natural, cfg.dt_geometric, cfg.boundary_guard, cfg.max_halvings, cfg.step_scale,
                static_cast<unsigned long long>(cfg.seed));
  return buf;
}

CycleRecord simulate_cycle(const CycleLawParams& params, int k, const IntegratorConfig& cfg, RngStream& rng) {
  params.validate();
  require(k >= 2, "simulate_cycle: k must be >= 2");
  cfg.validate();
  const double r = params.r;
  const double log_r = std::log(r);
  const double log_close = k * log_r;

  // Phase 0: from the entrance at 1 up to the first hit of r, natural time.
  HybridRadialPath path(1.0, cfg, HybridLevels{1.0, kInf});
  const double refine_dt = cfg.dt_natural * 1e-7;
  for (;;) {
    const double a = path.value();
    path.advance(rng);
    const double b = path.value();
    if (b < r) continue;
    // Locate the crossing of r inside the last step by Brownian-bridge
    // bisection, then restart the path from the located point.
    const double h = path.last_natural_step();
    double lo_t = 0.0, lo_v = a, hi_t = h, hi_v = b;
    while (hi_t - lo_t > refine_dt) {
      const double mid_t = 0.5 * (lo_t + hi_t);
      const double mid_v = 0.5 * (lo_v + hi_v) + 0.5 * std::sqrt(hi_t - lo_t) * rng.normal();
      if (mid_v >= r) {
        hi_t = mid_t;
        hi_v = mid_v;
      } else {
        lo_t = mid_t;
        lo_v = mid_v;
      }
    }
    path.rewind(h - hi_t, hi_v);
    break;
  }

  CycleRecord rec;
  rec.k = k;
  rec.H = path.natural_time();
  double m = r;  // R(H) = r
  double log_m = log_r;
  double log_run_max = std::max(log_r, path.log_value());
  double log_b = log_run_max;
  double T = rec.H;
  bool in_phase2 = false;

  auto dip_level = [&] { return std::min(m * (1.0 + kDipMargin), m * r); };
  auto climb_level = [&] { return in_phase2 ? r * r * m : r * r; };
  path.set_levels({dip_level(), climb_level()});

  while (path.log_value() < log_close) {
    if (!path.geometric()) {
      const double t_left = path.natural_time();
      const double a = path.value();
      path.advance(rng);
      const double b = path.value();
      const double h = path.last_natural_step();
      // The bridge over the step dips below m with probability
      // exp(-2 (a-m)(b-m) / h); skip the draw when that is negligible.
      if ((a - m) * (b - m) < 20.0 * h) {
        const double low = detail::bridge_minimum(a, b, h, rng.uniform());
        if (low < m) {
          m = std::max(low, 1.0 + cfg.boundary_guard);
          log_m = std::log(m);
          T = t_left;
          log_b = log_run_max;
          path.set_levels({dip_level(), climb_level()});
        }
      }
    } else {
      if (!in_phase2) {
        in_phase2 = true;
        path.set_levels({dip_level(), climb_level()});
      }
      path.advance(rng);
      if (path.log_value() < log_m) {
        log_m = path.log_value();
        m = std::exp(log_m);
        T = path.natural_time();
        log_b = log_run_max;
        path.set_levels({dip_level(), climb_level()});
      }
    }
    log_run_max = std::max(log_run_max, path.log_value());
    if (path.mode_switches() > kMaxModeSwitches)
      fail(ErrorCode::phase_thrash, "simulate_cycle: natural/geometric switch limit exceeded");
  }

  rec.T = T;
  rec.A = m;
  rec.U = log_m / log_r;
  rec.B = std::exp(log_b);
  rec.V = log_b / log_r;
  rec.err_bound = rec.U / k;
  return rec;
}

CyclePool sample_cycle_pool(const CycleLawParams& params, int k, std::size_t n, const IntegratorConfig& cfg,
                            unsigned workers) {
  params.validate();
  cfg.validate();
  require(k >= 2, "sample_cycle_pool: k must be >= 2");
  CyclePool pool;
  pool.params = params;
  pool.k = k;
  pool.cfg_fingerprint = fingerprint(cfg);
  pool.records.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    pool.records[i] = simulate_cycle(params, k, cfg, rng);
  });
  return pool;
}

RenewalSequence assemble_from_draws(double r, std::span<const double> U, std::span<const double> lnTp) {
  require(r > 1.0, "assemble: r must be > 1");
  require(U.size() == lnTp.size(), "assemble: U and lnTp differ in length");
  require(!U.empty(), "assemble: need at least one cycle");
  const double log_r = std::log(r);
  const std::size_t n = U.size();
  RenewalSequence seq;
  seq.r = r;
  seq.U.assign(U.begin(), U.end());
  seq.lnTp.assign(lnTp.begin(), lnTp.end());
  seq.lnA.resize(n);
  seq.lnT.resize(n);
  seq.lnS.resize(n);
  seq.S.resize(n);
  // ln T_i = logsumexp(ln T_{i-1}, 2 ln A_{i-1} + ln T'_i), carried as
  // ln S_i = ln T_i - 2 ln A_i, which stays O(1) while ln T_i grows like i.
  double ln_a = 0.0;
  double ln_s = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double step = U[i] * log_r;
    ln_s = (i == 0 ? lnTp[i] : log_add_exp(ln_s, lnTp[i])) - 2.0 * step;
    ln_a += step;
    seq.lnA[i] = ln_a;
    seq.lnS[i] = ln_s;
    seq.lnT[i] = ln_s + 2.0 * ln_a;
    seq.S[i] = std::exp(ln_s);
  }
  return seq;
}

RenewalSequence assemble_renewal(const CyclePool& pool, std::size_t n, RngStream& rng) {
  if (pool.empty()) fail(ErrorCode::empty_source, "assemble_renewal: cycle pool is empty");
  require(n >= 1, "assemble_renewal: n must be >= 1");
  std::vector<double> U(n), lnTp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = pool.records[rng.below(pool.size())];
    U[i] = c.U;
    lnTp[i] = std::log(c.T);
  }
  return assemble_from_draws(pool.params.r, U, lnTp);
}

RenewalSequence assemble_renewal(double r, const CycleSampler& sampler, std::size_t n, RngStream& rng) {
  if (!sampler) fail(ErrorCode::empty_source, "assemble_renewal: no cycle sampler");
  require(n >= 1, "assemble_renewal: n must be >= 1");
  std::vector<double> U(n), lnTp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CycleDraw d = sampler(rng);
    U[i] = d.U;
    lnTp[i] = d.lnTp;
  }
  return assemble_from_draws(r, U, lnTp);
}

RenewalSequence assemble_in_order(const CyclePool& pool, std::size_t offset, std::size_t n) {
  if (pool.empty()) fail(ErrorCode::empty_source, "assemble_in_order: cycle pool is empty");
  require(n >= 1 && offset + n <= pool.size(), "assemble_in_order: range exceeds the pool");
  std::vector<double> U(n), lnTp(n);
  for (std::size_t i = 0; i < n; ++i) {
    U[i] = pool.records[offset + i].U;
    lnTp[i] = std::log(pool.records[offset + i].T);
  }
  return assemble_from_draws(pool.params.r, U, lnTp);
}

std::vector<double> s_sequence(const RenewalSequence& seq) { return seq.S; }

double s_recursion_residual(const RenewalSequence& seq) {
  const double log_r = std::log(seq.r);
  double worst = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < seq.n(); ++i) {
    const double alpha = std::exp(-2.0 * seq.U[i] * log_r);
    const double beta = std::exp(seq.lnTp[i]) * alpha;
    const double predicted = alpha * prev + beta;
    worst = std::max(worst, std::abs(seq.S[i] - predicted) / seq.S[i]);
    prev = seq.S[i];
  }
  return worst;
}

LogEnvelope sqrt_envelope() {
  return [](double log_t) { return 0.5 * log_t; };
}

LogEnvelope power_envelope(std::function<double(double)> g) {
  return [g = std::move(g)](double log_t) { return log_t * g(iterated_log_from_log(2, log_t)); };
}

LogEnvelope escape_envelope(double K) {
  require(K > 0.0, "escape_envelope: K must be > 0");
  const double log_k = std::log(K);
  return [log_k](double log_t) {
    return log_k + 0.5 * log_t + 0.5 * std::log(iterated_log_from_log(3, log_t));
  };
}

CrossingReport future_min_envelope(const RenewalSequence& seq, const LogEnvelope& envelope, CrossingSide side,
                                   std::size_t first, std::size_t last) {
  require(envelope != nullptr, "future_min_envelope: no envelope");
  require(first >= 1 && first <= last && last <= seq.n(), "future_min_envelope: bad index window");
  CrossingReport rep;
  for (std::size_t i = first; i <= last; ++i) {
    const double log_env = envelope(seq.lnT[i - 1]);
    // ln f = -inf (f vanishes, e.g. ln_3 t = 0) is a valid value; +inf and NaN are not.
    if (std::isnan(log_env) || log_env == std::numeric_limits<double>::infinity())
      fail(ErrorCode::non_finite, "future_min_envelope: envelope evaluation failed");
    const double margin = seq.lnA[i - 1] - log_env;
    ++rep.checked;
    if ((side == CrossingSide::below && margin < 0.0) || (side == CrossingSide::above && margin > 0.0)) {
      ++rep.count;
      rep.indices.push_back(i);
      rep.margins.push_back(margin);
    }
  }
  return rep;
}

std::vector<double> envelope_margins(const RenewalSequence& seq, const LogEnvelope& envelope) {
  std::vector<double> out(seq.n());
  for (std::size_t i = 0; i < seq.n(); ++i) out[i] = seq.lnA[i] - envelope(seq.lnT[i]);
  return out;
}

std::vector<RenewalPoint> simulate_renewal_direct(const CycleLawParams& params, std::size_t n, int end_margin,
                                                  const IntegratorConfig& cfg, RngStream& rng) {
  params.validate();
  require(n >= 1 && end_margin >= 1, "simulate_renewal_direct: need n >= 1, end_margin >= 1");
  const double r = params.r;
  const double log_end = static_cast<double>(n + static_cast<std::size_t>(end_margin)) * std::log(r);
  HybridRadialPath path(1.0, cfg, HybridLevels{r, r * r});
  // Per step: end time, ln R at the end, and ln of a Brownian-bridge draw of
  // the minimum inside the step. In geometric time ln R has volatility 1/X,
  // so its bridge there uses quadratic variation h / (x_a x_b).
  std::vector<double> times{path.natural_time()};
  std::vector<double> logs{path.log_value()};
  std::vector<double> step_min{path.log_value()};
  while (path.log_value() < log_end) {
    const bool geometric = path.geometric();
    const double s0 = path.geometric_time();
    const double x0 = path.scaled_value();
    const double log0 = path.log_value();
    const double r0 = path.value();
    path.advance(rng);
    double low;
    if (geometric && path.geometric()) {
      const double qv = (path.geometric_time() - s0) / (x0 * path.scaled_value());
      low = detail::bridge_minimum(log0, path.log_value(), qv, rng.uniform());
    } else if (!geometric && !path.geometric()) {
      low = std::log(std::max(detail::bridge_minimum(r0, path.value(), path.last_natural_step(), rng.uniform()),
                              1.0));
    } else {
      low = std::min(log0, path.log_value());
    }
    times.push_back(path.natural_time());
    logs.push_back(path.log_value());
    step_min.push_back(std::max(low, 0.0));
  }
  // suffix minimum over the step minima: the future minima process
  std::vector<double> future_min(logs.size());
  std::vector<std::size_t> arg(logs.size());
  double running = kInf;
  std::size_t where = logs.size() - 1;
  for (std::size_t i = logs.size(); i-- > 0;) {
    if (step_min[i] < running) {
      running = step_min[i];
      where = i;
    }
    future_min[i] = running;
    arg[i] = where;
  }
  std::vector<RenewalPoint> out;
  double log_a = 0.0;
  std::size_t idx = 0;
  const double log_r = std::log(r);
  for (std::size_t c = 0; c < n; ++c) {
    const double target = log_a + log_r;
    while (idx < logs.size() && logs[idx] < target) ++idx;
    require(idx + 1 < logs.size(), "simulate_renewal_direct: path ended before the next hit");
    const double record = std::min(logs[idx], future_min[idx + 1]);
    const std::size_t at = record == logs[idx] ? idx : arg[idx + 1];
    out.push_back({times[at], std::exp(record)});
    log_a = record;
    idx = at;
  }
  return out;
}

}  // namespace moustache
