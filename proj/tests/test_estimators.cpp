#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "laws.hpp"
#include "regeneration.hpp"
#include "sde.hpp"

using namespace moustache;

namespace {

CyclePool constant_pool(double T, std::size_t n) {
  CyclePool pool;
  pool.k = 30;
  for (std::size_t i = 0; i < n; ++i) {
    CycleRecord c;
    c.H = T / 2;
    c.T = T;
    c.U = 0.5;
    c.A = std::pow(2.0, 0.5);
    c.V = 1.5;
    c.B = std::pow(2.0, 1.5);
    c.k = 30;
    c.err_bound = 0.5 / 30;
    pool.records.push_back(c);
  }
  return pool;
}

// Law of R(t)/sqrt(t) from r0, by Crank-Nicolson on the killed planar heat
// equation u_t = (1/2) e^{-2 rho} u_rho,rho in rho = ln r with u = 0 at the
// unit circle. The conditioned density in rho is ln r * u * r^2. Returns
// (y, cdf) pairs on the grid.
struct GridCdf {
  std::vector<double> y, cdf;

  double operator()(double v) const {
    if (v <= y.front()) return 0.0;
    if (v >= y.back()) return 1.0;
    const auto i = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), v) - y.begin());
    const double w = (v - y[i - 1]) / (y[i] - y[i - 1]);
    return cdf[i - 1] + w * (cdf[i] - cdf[i - 1]);
  }
};

GridCdf conditioned_radius_cdf(double r0, double t, int cells) {
  const double top = std::log(40.0 * std::sqrt(t) + 50.0);
  const double h = top / cells;
  const int m = cells - 1;  // interior nodes
  std::vector<double> c(m), u(m);
  const double rho0 = std::log(r0);
  for (int i = 0; i < m; ++i) {
    const double rho = (i + 1) * h;
    c[i] = 0.5 * std::exp(-2.0 * rho) / (h * h);
    u[i] = std::exp(-0.5 * std::pow((rho - rho0) / 0.02, 2));
  }
  std::vector<double> rhs(m), diag(m), upper(m);
  double now = 0.0, dt = 1e-4;
  int steps = 0;
  while (now < t) {
    const double k = std::min(dt, t - now);
    for (int i = 0; i < m; ++i) {
      const double left = i > 0 ? u[i - 1] : 0.0;
      const double right = i + 1 < m ? u[i + 1] : 0.0;
      rhs[i] = u[i] + 0.5 * k * c[i] * (left - 2.0 * u[i] + right);
    }
    // Thomas algorithm for (I - k/2 L) u = rhs
    const double a = -0.5 * k;
    for (int i = 0; i < m; ++i) {
      const double sub = i > 0 ? a * c[i] : 0.0;
      diag[i] = 1.0 + k * c[i] - (i > 0 ? sub * upper[i - 1] : 0.0);
      upper[i] = a * c[i] / diag[i];
      rhs[i] = (rhs[i] - (i > 0 ? sub * rhs[i - 1] : 0.0)) / diag[i];
    }
    for (int i = m - 1; i >= 0; --i) u[i] = rhs[i] - (i + 1 < m ? upper[i] * u[i + 1] : 0.0);
    now += k;
    if (++steps % 50 == 0) dt *= 1.5;
  }
  GridCdf out;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double rho = (i + 1) * h;
    acc += rho * u[i] * std::exp(2.0 * rho);
    out.y.push_back(std::exp(rho) / std::sqrt(t));
    out.cdf.push_back(acc);
  }
  for (double& v : out.cdf) v /= acc;
  return out;
}

double sup_distance(const GridCdf& f, const std::function<double(double)>& g) {
  double d = 0.0;
  for (std::size_t i = 0; i < f.y.size(); ++i) d = std::max(d, std::abs(f.cdf[i] - g(f.y[i])));
  return d;
}

}  // namespace

TEST_CASE("Wilson interval covers at the nominal rate") {
  RngStream rng(5, 0);
  const double p = 0.3;
  const std::size_t n = 200, reps = 4000;
  std::size_t covered = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += rng.uniform() < p ? 1 : 0;
    const auto ci = wilson_interval(s, n);
    CHECK(ci.low <= static_cast<double>(s) / n);
    CHECK(ci.high >= static_cast<double>(s) / n);
    if (ci.low <= p && p <= ci.high) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  CHECK(rate >= 0.93);
  CHECK(rate <= 0.97);

  const auto zero = wilson_interval(0, 50);
  CHECK(zero.low == 0.0);
  CHECK(zero.high > 0.0);
  const auto all = wilson_interval(50, 50);
  CHECK(all.high == doctest::Approx(1.0));
  CHECK_THROWS_AS(wilson_interval(1, 0), Error);
  CHECK_THROWS_AS(wilson_interval(3, 2), Error);
}

TEST_CASE("mean estimate") {
  const std::vector<double> same(7, 0.1);
  const auto m = mean_estimate(same);
  CHECK(m.mean == 0.1);
  CHECK(m.se == 0.0);
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto e = mean_estimate(xs);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK_THROWS_AS(mean_estimate(std::vector<double>{}), Error);
}

TEST_CASE("tail estimates on a constant pool") {
  const auto pool = constant_pool(5.0, 100);
  const std::vector<double> grid{1.0, 5.0, 5.001, 10.0};
  const auto est = estimate_t_tail(pool, grid);
  REQUIRE(est.p_hat.size() == 4);
  CHECK(est.p_hat[0] == 1.0);
  CHECK(est.p_hat[1] == 1.0);
  CHECK(est.p_hat[2] == 0.0);
  CHECK(est.p_hat[3] == 0.0);
  CHECK(est.n == 100);
  CHECK(est.trunc_bias == doctest::Approx(0.5 / 30));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(est.ci_low[i] <= est.p_hat[i]);
    CHECK(est.ci_high[i] >= est.p_hat[i]);
    CHECK(est.ci_high[i] <= 1.0);
  }
  CHECK(estimate_t_lower_tail(pool, 5.0).p_hat == 1.0);
  CHECK(estimate_t_lower_tail(pool, 4.999).p_hat == 0.0);

  CyclePool empty;
  CHECK_THROWS_AS(estimate_t_tail(empty, grid), Error);
  CHECK_THROWS_AS(estimate_t_tail(pool, std::vector<double>{-1.0}), Error);
}

TEST_CASE("tail estimates are non-increasing on a sampled pool") {
  const auto pool = sample_cycle_pool(CycleLawParams{2.0}, 8, 400, IntegratorConfig{}, 1);
  const std::vector<double> grid{0.1, 1.0, 10.0, 100.0, 1000.0};
  const auto est = estimate_t_tail(pool, grid);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(est.p_hat[i] <= est.p_hat[i - 1]);
}

TEST_CASE("one-sample Kolmogorov-Smirnov") {
  CHECK(ks_threshold(10000) == doctest::Approx(0.0163));
  const std::vector<double> zeros(20, 0.0);
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_distance(zeros, uniform).d_n == 1.0);
  CHECK_FALSE(ks_distance(zeros, uniform).pass);

  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
  const auto ks = ks_distance(grid, uniform);
  CHECK(ks.d_n == doctest::Approx(0.005));
  CHECK(ks.pass);

  CHECK_THROWS_AS(ks_distance(std::vector<double>(9, 0.5), uniform), Error);
}

TEST_CASE("two-sample Kolmogorov-Smirnov") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{5, 6, 7};
  CHECK(ks_two_sample(a, a) == 0.0);
  CHECK(ks_two_sample(a, b) == 1.0);
  const std::vector<double> c{1, 2, 5, 6};
  CHECK(ks_two_sample(a, c) == doctest::Approx(0.5));
}

TEST_CASE("ergodic average") {
  TrajectoryGrid x;
  x.kind = PathKind::X;
  for (int i = 0; i <= 200; ++i) x.push(0.07 * i, 1.0 + 0.5 * std::sin(i));
  CHECK(ergodic_average(x, [](double) { return 0.3; }) == 0.3);

  TrajectoryGrid ramp;
  ramp.kind = PathKind::X;
  ramp.push(0.0, 0.0);
  ramp.push(20.0, 20.0);
  CHECK(ergodic_average(ramp, [](double v) { return v; }) == doctest::Approx(10.0));

  TrajectoryGrid short_path;
  short_path.kind = PathKind::X;
  short_path.push(0.0, 1.0);
  short_path.push(1.0, 1.0);
  CHECK_THROWS_AS(ergodic_average(short_path, [](double v) { return v; }), Error);
}

TEST_CASE("exit probability Monte Carlo agrees with the closed form") {
  IntegratorConfig cfg;
  const double exact = exit_prob(2.0, 4.0, 16.0);
  const auto coarse = exit_prob_mc(2.0, 4.0, 16.0, 2000, cfg, 1);
  CHECK(coarse.ci.low <= coarse.estimate);
  CHECK(coarse.ci.high >= coarse.estimate);
  const double se = std::sqrt(exact * (1 - exact) / 2000.0);
  CHECK(std::abs(coarse.estimate - exact) <= 3.5 * se);

  IntegratorConfig fine = cfg;
  fine.dt_natural = cfg.dt_natural / 4;
  const auto f = exit_prob_mc(2.0, 4.0, 16.0, 2000, fine, 1);
  CHECK(std::abs(f.estimate - coarse.estimate) <= 5.0 * se);

  CHECK_THROWS_AS(exit_prob_mc(2.0, 1.5, 16.0, 2000, cfg, 1), Error);
  CHECK_THROWS_AS(exit_prob_mc(0.5, 4.0, 16.0, 2000, cfg, 1), Error);
  CHECK_THROWS_AS(exit_prob_mc(2.0, 4.0, 16.0, 10, cfg, 1), Error);
}

TEST_CASE("Rayleigh and moment checks validate their inputs") {
  IntegratorConfig cfg;
  CHECK_THROWS_AS(rayleigh_limit_check(1.0, 10.0, 2000, cfg, 1), Error);
  CHECK_THROWS_AS(rayleigh_limit_check(1.0, 1000.0, 10, cfg, 1), Error);
  CHECK_THROWS_AS(moment_check(0.9, 1.0, 100, cfg, 1), Error);
}

TEST_CASE("renewal diagnostics") {
  SUBCASE("degenerate U gives an exact drift estimate") {
    const std::size_t n = 2000;
    std::vector<double> U(n, 0.25), lnTp(n, 0.0);
    const auto seq = assemble_from_draws(2.0, U, lnTp);
    const std::vector<double> grid{2.0};
    const auto rep = rde_diagnostics(seq, grid);
    CHECK(rep.a_hat == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-14));
    CHECK(rep.a_se == doctest::Approx(0.0).epsilon(1e-14));
    // beta_i = T'_i r^{-2U_i} = 2^{-1/2} < 2
    CHECK(rep.b_hat[0] == 0.0);
    CHECK(std::isfinite(rep.beta0_hat));
    CHECK(rep.beta0_hat > 0.0);
    CHECK(rep.beta0_index > static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
  }
  SUBCASE("too few cycles") {
    std::vector<double> U(10, 0.5), lnTp(10, 0.0);
    const auto seq = assemble_from_draws(2.0, U, lnTp);
    CHECK_THROWS_AS(rde_diagnostics(seq, std::vector<double>{2.0}), Error);
  }
}

TEST_CASE("R(t)/sqrt(t) follows the killed heat equation law, which nears Rayleigh only like 1/ln t") {
  const double t = 1000.0;
  const auto law = conditioned_radius_cdf(2.0, t, 3000);
  const double gap_now = sup_distance(law, rayleigh_cdf);
  CHECK(gap_now > 0.12);
  CHECK(gap_now < 0.17);
  const double gap_later = sup_distance(conditioned_radius_cdf(2.0, 1e6, 3000), rayleigh_cdf);
  CHECK(gap_later < gap_now);
  CHECK(gap_later * std::log(1e6) == doctest::Approx(gap_now * std::log(t)).epsilon(0.1));

  IntegratorConfig cfg;
  const std::size_t n = 4000;
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(cfg.seed + 3, i);
    HybridRadialPath path(2.0, cfg, HybridLevels{1.0, 2.0});
    while (path.advance(rng, std::log1p(t))) {
    }
    scaled[i] = path.scaled_value() * std::sqrt((1.0 + t) / t);
  }
  CHECK(ks_distance(scaled, law).pass);
  CHECK_FALSE(ks_distance(scaled, rayleigh_cdf).pass);
}
