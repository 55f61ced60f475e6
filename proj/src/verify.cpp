#include "verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "error.hpp"
#include "estimators.hpp"
#include "laws.hpp"
#include "regeneration.hpp"
#include "sde.hpp"

namespace moustache {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Each criterion draws from its own seed so that no two experiments share
// noise streams.
IntegratorConfig with_subseed(const IntegratorConfig& base, std::uint64_t tag) {
  IntegratorConfig cfg = base;
  cfg.seed = stream_key(base.seed, 0x5eed0000ULL + tag);
  return cfg;
}

class Runner {
 public:
  Runner(const CriterionCallback& cb) : cb_(cb) {}

  template <class Body>
  void run(const std::string& id, const std::string& title, bool asserted, Body&& body) {
    CriterionResult res;
    res.id = id;
    res.title = title;
    res.asserted = asserted;
    const auto start = Clock::now();
    try {
      body(res);
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = std::string("error: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (cb_) cb_(res);
    results_.push_back(std::move(res));
  }

  std::vector<CriterionResult> take() { return std::move(results_); }

 private:
  const CriterionCallback& cb_;
  std::vector<CriterionResult> results_;
};

double degenerate_oracle_error(double r, std::size_t n) {
  std::vector<double> U(n, 1.0), lnTp(n, 0.0);
  const auto seq = assemble_from_draws(r, U, lnTp);
  const double log_r = std::log(r);
  double worst = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    // T_i = (r^{2i} - 1) / (r^2 - 1)
    const double exact = 2.0 * i * log_r + std::log1p(-std::exp(-2.0 * i * log_r)) - std::log(r * r - 1.0);
    worst = std::max(worst, std::abs(seq.lnT[i - 1] - exact) / std::max(1.0, std::abs(exact)));
  }
  return worst;
}

void exact_suite(Runner& run, const ExperimentConfig& cfg) {
  run.run("E1", "tail of V: closed form matches the series", true, [](CriterionResult& res) {
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double v = 1.01 * std::pow(100.0 / 1.01, i / 400.0);
      worst = std::max(worst, std::abs(tail_v(v) - tail_v_series(v, 100000)));
    }
    res.pass = worst < 1e-10;
    res.detail = fmt("max |closed - series| on [1.01, 100] = %.3g", worst);
  });
  run.run("E2", "tail of V: v P(V > v) -> 1/2", true, [](CriterionResult& res) {
    const double x = 1e4 * tail_v(1e4);
    res.pass = std::abs(x - 0.5) < 1e-3;
    res.detail = fmt("1e4 * P(V > 1e4) = %.8f", x);
  });
  run.run("E3", "conditional V quantile inverts the CDF", true, [](CriterionResult& res) {
    double worst = 0.0;
    for (double u : {0.01, 0.3, 0.5, 0.9, 0.999})
      for (double q : {1e-6, 0.1, 0.5, 0.9, 0.999999})
        worst = std::max(worst, std::abs(conditional_cdf_v(conditional_quantile_v(q, u), u) - q));
    res.pass = worst < 1e-9;
    res.detail = fmt("max |F(F^-1(q)) - q| = %.3g", worst);
  });
  run.run("E4", "exit probability closed form", true, [](CriterionResult& res) {
    const double p = exit_prob(2.0, 4.0, 16.0);
    res.pass = std::abs(p - 2.0 / 3.0) < 1e-14 && exit_prob(2.0, 2.0, 16.0) == 0.0 && exit_prob(2.0, 16.0, 16.0) == 1.0;
    res.detail = fmt("p(2, 4, 16) = %.17g", p);
  });
  run.run("E5", "Rayleigh median", true, [](CriterionResult& res) {
    const double c = rayleigh_cdf(std::sqrt(2.0 * std::numbers::ln2));
    res.pass = std::abs(c - 0.5) < 1e-15;
    res.detail = fmt("F(sqrt(2 ln 2)) = %.17g", c);
  });
  run.run("E6", "future minimum law", true, [](CriterionResult& res) {
    const double c = future_min_cdf(std::sqrt(7.0), 7.0);
    res.pass = std::abs(c - 0.5) < 1e-15 && future_min_cdf(7.0, 7.0) == 1.0;
    res.detail = fmt("P(min <= sqrt b) = %.17g", c);
  });
  run.run("E7", "renewal assembly: geometric-sum oracle", true, [](CriterionResult& res) {
    const double e = degenerate_oracle_error(2.0, 100000);
    res.pass = e < 1e-10;
    res.detail = fmt("max relative error of ln T_i over 1e5 cycles = %.3g", e);
  });
  run.run("E8", "renewal assembly: S recursion", true, [&](CriterionResult& res) {
    RngStream rng(cfg.integrator.seed, 0);
    const CycleLawParams params{cfg.r};
    auto sampler = [&](RngStream& g) {
      const auto uv = sample_uv(params, g);
      return CycleDraw{uv.first, std::log(rayleigh_sample(g))};
    };
    const auto seq = assemble_renewal(cfg.r, sampler, 10000, rng);
    const double resid = s_recursion_residual(seq);
    res.pass = resid < 1e-10;
    res.detail = fmt("max relative residual = %.3g", resid);
  });
  run.run("E9", "sqrt envelope margin equals -ln S / 2", true, [&](CriterionResult& res) {
    RngStream rng(cfg.integrator.seed, 1);
    std::vector<double> U(1000), lnTp(1000);
    for (std::size_t i = 0; i < U.size(); ++i) {
      U[i] = rng.uniform();
      lnTp[i] = std::log(rng.uniform());
    }
    const auto seq = assemble_from_draws(cfg.r, U, lnTp);
    const auto m = envelope_margins(seq, sqrt_envelope());
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      worst = std::max(worst, std::abs(m[i] + 0.5 * seq.lnS[i]) / std::max(1.0, std::abs(seq.lnT[i])));
    res.pass = worst < 1e-10;
    res.detail = fmt("max deviation = %.3g", worst);
  });
}

void acceptance_suite(Runner& run, const ExperimentConfig& cfg) {
  const unsigned workers = cfg.workers;
  const double ln2 = std::numbers::ln2;

  {
    IntegratorConfig ic = with_subseed(cfg.integrator, 1);
    ic.dt_natural = 1e-3;
    MomentCheck mc;
    bool ok = false;
    std::string err = "moment run did not complete";
    run.run("A1", "martingale E 1/ln R(1) = 1/ln 2", true, [&](CriterionResult& res) {
      try {
        mc = moment_check(2.0, 1.0, 100000, ic, workers);
        ok = true;
      } catch (const std::exception& e) {
        err = e.what();
        throw;
      }
      const double z = (mc.inverse_log.mean - mc.inverse_log_stated) / mc.inverse_log.se;
      res.pass = std::abs(z) <= 4.0;
      res.detail = fmt("mean %.6f, stated %.6f, SE %.2e, z = %.2f", mc.inverse_log.mean, mc.inverse_log_stated,
                       mc.inverse_log.se, z);
    });
    run.run("A2", "second moment E R(1)^2 = 4 + 2(1 + 1/ln 2)", true, [&](CriterionResult& res) {
      if (!ok) fail(ErrorCode::internal, err);
      const double z = (mc.second_moment.mean - mc.second_moment_stated) / mc.second_moment.se;
      res.pass = std::abs(z) <= 4.0;
      res.detail = fmt("mean %.5f, stated %.5f, SE %.2e, z = %.2f", mc.second_moment.mean,
                       mc.second_moment_stated, mc.second_moment.se, z);
    });
  }

  const int k = 30;
  const CycleLawParams params{2.0};
  CyclePool pool;
  std::string pool_error;
  double pool_seconds = 0.0;
  {
    const auto start = Clock::now();
    try {
      pool = sample_cycle_pool(params, k, 100000, with_subseed(cfg.integrator, 6), workers);
    } catch (const std::exception& e) {
      pool_error = e.what();
    }
    pool_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  }
  auto need_pool = [&] {
    if (!pool_error.empty()) fail(ErrorCode::internal, "cycle pool: " + pool_error);
  };
  CyclePool head;
  if (pool_error.empty()) {
    head = pool;
    head.records.resize(10000);
  }

  run.run("A3", "cycle U is uniform on (0,1)", true, [&](CriterionResult& res) {
    need_pool();
    std::vector<double> u;
    for (const auto& c : head.records) u.push_back(c.U);
    const auto ks = ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
    res.pass = ks.d_n < 1.63 / 100.0;
    res.detail = fmt("KS D = %.4f (threshold %.4f, n = %zu)", ks.d_n, 1.63 / 100.0, ks.n);
  });
  run.run("A4", "P(V > 2) = 1 - ln 2", true, [&](CriterionResult& res) {
    need_pool();
    std::size_t hits = 0;
    for (const auto& c : head.records)
      if (c.V > 2.0) ++hits;
    const double n = static_cast<double>(head.size());
    const double p = static_cast<double>(hits) / n;
    const double exact = tail_v(2.0);
    const double se = std::sqrt(exact * (1.0 - exact) / n);
    const double tol = 3.0 * se + 1.0 / k;
    res.pass = std::abs(p - exact) <= tol;
    res.detail = fmt("p_hat %.4f, exact %.4f, tolerance %.4f", p, exact, tol);
  });
  run.run("A5", "exit probability (2, 4, 16) = 2/3", true, [&](CriterionResult& res) {
    const auto e = exit_prob_mc(2.0, 4.0, 16.0, 10000, with_subseed(cfg.integrator, 5), workers);
    const double exact = exit_prob(2.0, 4.0, 16.0);
    res.pass = e.ci.low <= exact && exact <= e.ci.high;
    res.detail = fmt("p_hat %.4f, Wilson CI [%.4f, %.4f], exact %.4f", e.estimate, e.ci.low, e.ci.high, exact);
  });
  run.run("A6", "upper tail P(T >= t) ln t / ln r in band", true, [&](CriterionResult& res) {
    need_pool();
    const std::vector<double> grid{1e3, 1e4};
    const auto te = estimate_t_tail(pool, grid);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double ratio = te.p_hat[i] * std::log(grid[i]) / ln2;
      ok = ok && ratio >= cfg.band_low && ratio <= cfg.band_high;
      detail += fmt("t=%g: ratio %.3f; ", grid[i], ratio);
    }
    res.pass = ok;
    res.detail = detail + fmt("band [%g, %g], %zu cycles in %.0f s", cfg.band_low, cfg.band_high, pool.size(),
                              pool_seconds);
  });
  run.run("A7", "lower tail -2 t ln P(T <= t) at t = 0.2 (diagnostic)", false, [&](CriterionResult& res) {
    need_pool();
    const auto lt = estimate_t_lower_tail(pool, 0.2);
    const double x = lt.p_hat > 0.0 ? -2.0 * 0.2 * std::log(lt.p_hat) : std::numeric_limits<double>::infinity();
    res.pass = lt.p_hat > 0.0 && x >= 0.5 && x <= 2.0;
    res.detail = fmt("p_hat %.5f, statistic %.3f, band [0.5, 2]", lt.p_hat, x);
  });
  run.run("A8", "Rayleigh limit of R(t)/sqrt(t) at t = 1e3", true, [&](CriterionResult& res) {
    const auto rc = rayleigh_limit_check(1.0, 1000.0, 10000, with_subseed(cfg.integrator, 8), workers);
    res.pass = rc.ks.d_n < 0.05;
    res.detail = fmt("KS D = %.4f (threshold 0.05, n = %zu)", rc.ks.d_n, rc.ks.n);
  });
  run.run("A9", "ergodic average of X^2 over geometric horizon 1e3", true, [&](CriterionResult& res) {
    const IntegratorConfig ic = with_subseed(cfg.integrator, 9);
    RngStream rng(ic.seed, 0);
    const auto path = simulate_x_path(1.0, 1000.0, ic, rng);
    const double avg = ergodic_average(path, [](double x) { return x * x; });
    res.pass = avg >= 1.9 && avg <= 2.1;
    res.detail = fmt("time average %.4f, target 2, band [1.9, 2.1]", avg);
  });
  run.run("A10", "renewal assembler: speed, oracle, recursion, beta0", true, [&](CriterionResult& res) {
    need_pool();
    RngStream rng(with_subseed(cfg.integrator, 10).seed, 0);
    const auto start = Clock::now();
    const auto seq = assemble_renewal(pool, 1000000, rng);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const double oracle = degenerate_oracle_error(2.0, 1000000);
    const double resid = s_recursion_residual(seq);
    const auto rde = rde_diagnostics(seq, std::vector<double>{1e4});
    res.pass = secs < 10.0 && oracle < 1e-10 && resid < 1e-10 && std::isfinite(rde.beta0_hat) &&
               rde.beta0_hat > 0.0;
    res.detail = fmt("1e6 cycles in %.2f s; oracle error %.2g; residual %.2g; min S_i ln_2 i = %.4g at i = %zu",
                     secs, oracle, resid, rde.beta0_hat, rde.beta0_index);
  });
  run.run("A11", "coupling BES^2 <= R on 100 paths, horizon 10", true, [&](CriterionResult& res) {
    const IntegratorConfig ic = with_subseed(cfg.integrator, 11);
    std::size_t violations = 0;
    std::size_t points = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      RngStream rng(ic.seed, i);
      const auto triple = coupled_triple(1.0, 10.0, ic, rng);
      violations += lower_coupling_violations(triple);
      points += triple.r.size();
    }
    res.pass = violations == 0;
    res.detail = fmt("%zu violations over %zu grid points", violations, points);
  });
  run.run("A12", "random difference equation: a_hat = -ln 2", true, [&](CriterionResult& res) {
    need_pool();
    const auto seq = assemble_in_order(pool, 0, 10000);
    const auto rde = rde_diagnostics(seq, std::vector<double>{1e4});
    const double z = (rde.a_hat + ln2) / rde.a_se;
    const double b_ratio = rde.b_hat[0] / ln2;
    res.pass = std::abs(z) <= 3.0;
    res.detail = fmt("a_hat %.4f (SE %.4f, z = %.2f); b_hat(1e4) = %.3f ln 2 (reported, band [0.5, 1.5])",
                     rde.a_hat, rde.a_se, z, b_ratio);
  });
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  std::string status = r.pass ? "PASS" : "FAIL";
  if (!r.asserted) status += "*";
  return fmt("%-5s %-4s %s: %s (%.1f s)", status.c_str(), r.id.c_str(), r.title.c_str(), r.detail.c_str(),
             r.seconds);
}

std::vector<CriterionResult> run_suite(const std::string& suite, const ExperimentConfig& cfg,
                                       const CriterionCallback& on_result) {
  cfg.validate();
  Runner runner(on_result);
  if (suite == "exact") {
    exact_suite(runner, cfg);
  } else if (suite == "acceptance") {
    acceptance_suite(runner, cfg);
  } else if (suite == "all") {
    exact_suite(runner, cfg);
    acceptance_suite(runner, cfg);
  } else {
    fail(ErrorCode::config, "unknown suite '" + suite + "' (expected exact, acceptance or all)");
  }
  return runner.take();
}

bool suite_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (r.asserted && !r.pass) return false;
  return true;
}

}  // namespace moustache
