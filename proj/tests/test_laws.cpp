#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "laws.hpp"

using namespace moustache;

namespace {

// Composite Gauss-Legendre (5 points) on [lo, hi] with `panels` panels.
template <class F>
double integrate(F f, double lo, double hi, int panels) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  const double h = (hi - lo) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (int j = 0; j < 5; ++j) sum += w[j] * f(mid + 0.5 * h * x[j]);
  }
  return 0.5 * h * sum;
}

// Integral over v in (1, inf) through v = 1/y, y in (0, 1).
template <class F>
double integrate_v(F f, int panels) {
  return integrate([&](double y) { return f(1.0 / y) / (y * y); }, 0.0, 1.0, panels);
}

double series_oracle(double v) {
  // Direct summation with a geometric bound on the remainder.
  double sum = 0.0;
  double power = 1.0;
  for (int n = 1; n < 2000000; ++n) {
    power /= v;
    const double term = power / (static_cast<double>(n) * (n + 1.0));
    sum += term;
    if (term < 1e-20 * sum) break;
  }
  return sum;
}

}  // namespace

TEST_CASE("density of (U, V)") {
  CHECK(density_uv(0.5, 2.0) == doctest::Approx(0.5 / 2.25).epsilon(1e-15));
  CHECK(density_uv(0.5, 0.9) == 0.0);
  CHECK(density_uv(-0.1, 2.0) == 0.0);

  SUBCASE("U-marginal is the constant 1") {
    for (int i = 1; i <= 20; ++i) {
      const double u = i / 21.0;
      const double m = integrate_v([u](double v) { return density_uv(u, v); }, 400);
      CHECK(std::abs(m - 1.0) < 1e-8);
    }
  }
  SUBCASE("double quadrature over u < 0.99 gives mass 0.99") {
    // the v-profile narrows to width 1 - u, so the last strip is left out
    const double total = integrate(
        [](double u) { return integrate_v([u](double v) { return density_uv(u, v); }, 1000); }, 0.0, 0.99, 200);
    CHECK(std::abs(total - 0.99) < 1e-8);
  }
  SUBCASE("P(V > 2) by quadrature equals 1 - ln 2") {
    const double p = integrate(
        [](double u) {
          return integrate([u](double y) { return density_uv(u, 1.0 / y) / (y * y); }, 0.0, 0.5, 400);
        },
        0.0, 1.0, 200);
    CHECK(std::abs(p - (1.0 - std::log(2.0))) < 1e-8);
  }
}

TEST_CASE("conditional law of V given U") {
  CHECK(conditional_quantile_v(0.5, 0.0) == 2.0);
  CHECK(conditional_cdf_v(2.0, 0.0) == 0.5);
  const auto uv = uv_from_uniforms(0.0, 0.5);
  CHECK(uv.second == 2.0);
  RngStream rng(11, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_uv(CycleLawParams{2.0}, rng);
    REQUIRE(s.first > 0.0);
    REQUIRE(s.first < 1.0);
    REQUIRE(s.second > 1.0);
  }
}

TEST_CASE("tail of V") {
  CHECK(tail_v(1.0) == 1.0);
  CHECK(tail_v(2.0) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-14));
  CHECK(tail_v(10.0) == doctest::Approx(0.0517553).epsilon(1e-5));
  CHECK(std::abs(tail_v(10.0) / 0.05 - 1.0) < 0.04);
  CHECK(std::abs(1e4 * tail_v(1e4) - 0.5) < 1e-3);

  SUBCASE("closed form against the series on [1.01, 100]") {
    for (int i = 0; i <= 200; ++i) {
      const double v = 1.01 * std::pow(100.0 / 1.01, i / 200.0);
      REQUIRE(std::abs(tail_v(v) - tail_v_series(v, 1000000)) < 1e-10);
      REQUIRE(std::abs(tail_v(v) - series_oracle(v)) < 1e-10);
    }
  }
  SUBCASE("continuous and decreasing down to v = 1") {
    double prev = 1.0;
    for (double d : {1e-15, 1e-12, 1e-9, 1e-6, 1e-6 * (1 + 1e-9), 1e-3, 0.1, 0.5, 1.0, 10.0, 1e3}) {
      const double t = tail_v(1.0 + d);
      REQUIRE(t < prev);
      REQUIRE(t > 0.0);
      prev = t;
    }
    CHECK(1.0 - tail_v(1.0 + 1e-12) < 1e-10);
  }
  SUBCASE("density of V is minus the derivative of the tail") {
    for (double v : {1.1, 1.5, 2.0, 5.0, 30.0}) {
      const double h = 1e-5 * v;
      const double fd = -(tail_v(v + h) - tail_v(v - h)) / (2.0 * h);
      CHECK(density_v(v) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(tail_v(0.5), Error);
}

TEST_CASE("samplers against their laws") {
  const std::size_t n = 100000;
  RngStream rng(2024, 1);
  const CycleLawParams params{2.0};

  std::vector<double> us(n), vs(n);
  std::size_t over2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sample_uv(params, rng);
    us[i] = s.first;
    vs[i] = s.second;
    if (s.second > 2.0) ++over2;
  }
  const double p = 1.0 - std::log(2.0);
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(over2) / n - p) <= 3.0 * se);

  std::vector<double> head_u(us.begin(), us.begin() + 10000);
  std::vector<double> head_v(vs.begin(), vs.begin() + 10000);
  CHECK(ks_distance(head_u, [](double x) { return std::clamp(x, 0.0, 1.0); }).pass);
  CHECK(ks_distance(head_v, [](double v) { return v <= 1.0 ? 0.0 : 1.0 - tail_v(v); }).pass);

  SUBCASE("joint CDF of (U, V)") {
    // Oracle: quadrature of the density.
    double worst = 0.0;
    for (double u0 : {0.2, 0.5, 0.8})
      for (double v0 : {1.5, 2.0, 4.0}) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < 10000; ++i)
          if (head_u[i] <= u0 && head_v[i] <= v0) ++c;
        const double exact = integrate(
            [v0](double u) { return integrate([u](double v) { return density_uv(u, v); }, 1.0, v0, 200); }, 0.0, u0,
            100);
        worst = std::max(worst, std::abs(c / 1e4 - exact));
      }
    CHECK(worst < 1.63 / 100.0);
  }

  SUBCASE("future minimum") {
    const double b = std::exp(2.0);
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = sample_future_min(b, rng);
      REQUIRE(m > 1.0);
      REQUIRE(m < b);
      if (m <= std::exp(1.0)) ++below;
    }
    CHECK(std::abs(below / static_cast<double>(n) - 0.5) <= 3.0 * std::sqrt(0.25 / n));
    std::vector<double> exps(10000);
    for (auto& x : exps) x = std::log(sample_future_min(2.0, rng)) / std::log(2.0);
    CHECK(ks_distance(exps, [](double x) { return std::clamp(x, 0.0, 1.0); }).pass);
  }

  SUBCASE("Rayleigh") {
    std::vector<double> sq(n);
    for (auto& x : sq) {
      const double y = rayleigh_sample(rng);
      x = y * y;
    }
    double m = 0.0;
    for (double x : sq) m += x;
    m /= n;
    double v = 0.0;
    for (double x : sq) v += (x - m) * (x - m);
    v /= (n - 1.0);
    CHECK(std::abs(m - 2.0) <= 3.0 * std::sqrt(v / n));
  }
}

TEST_CASE("future minimum CDF") {
  CHECK(future_min_cdf(std::exp(1.0), std::exp(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(future_min_cdf(1.0, 3.0) == 0.0);
  CHECK(future_min_cdf(3.0, 3.0) == 1.0);
}

TEST_CASE("exit probability") {
  CHECK(exit_prob(2.0, 4.0, 16.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(exit_prob(2.0, 2.0, 16.0) == 0.0);
  CHECK(exit_prob(2.0, 16.0, 16.0) == 1.0);
  CHECK_THROWS_AS(exit_prob(1.0, 2.0, 3.0), Error);

  SUBCASE("matches the scale function obtained by quadrature") {
    // s'(x) = exp(-int 2 drift) = 1 / (x ln^2 x)
    auto scale = [](double lo, double hi) {
      return integrate([](double x) { return 1.0 / (x * std::log(x) * std::log(x)); }, lo, hi, 2000);
    };
    for (auto [a, r0, b] : {std::tuple{2.0, 4.0, 16.0}, std::tuple{1.2, 1.5, 3.0}, std::tuple{3.0, 10.0, 1e3}}) {
      const double oracle = scale(a, r0) / scale(a, b);
      CHECK(exit_prob(a, r0, b) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
  SUBCASE("monotone in r0 and in a") {
    double prev = 0.0;
    for (double r0 = 2.0; r0 <= 16.0; r0 += 0.5) {
      const double p = exit_prob(2.0, r0, 16.0);
      REQUIRE(p >= prev);
      prev = p;
    }
    prev = 0.0;
    for (double a = 3.9; a > 1.05; a -= 0.1) {
      const double p = exit_prob(a, 4.0, 16.0);
      REQUIRE(p >= prev);
      prev = p;
    }
  }
}

TEST_CASE("Rayleigh law") {
  CHECK(rayleigh_cdf(0.0) == 0.0);
  CHECK(rayleigh_cdf(std::sqrt(2.0 * std::log(2.0))) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rayleigh_quantile(0.5) == doctest::Approx(1.17741).epsilon(1e-5));
  const double mass = integrate(rayleigh_pdf, 0.0, 40.0, 4000);
  CHECK(std::abs(mass - 1.0) < 1e-8);
  const double second = integrate([](double x) { return x * x * rayleigh_pdf(x); }, 0.0, 40.0, 4000);
  CHECK(second == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("Hoeffding bounds") {
  CHECK(hoeffding_upper(8, 2.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(hoeffding_upper(5, 1.0) == 1.0);
  CHECK(hoeffding_lower(5, 1.0) == 1.0);
  CHECK_THROWS_AS(hoeffding_upper(0, 2.0), Error);

  RngStream rng(5, 5);
  std::size_t hits = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += rng.uniform();
    if (2.0 * s >= 30.0) ++hits;
  }
  CHECK(static_cast<double>(hits) / trials <= hoeffding_upper(20, 1.5));
}

TEST_CASE("T tail envelopes") {
  const auto band = t_tail_envelope(std::exp(10.0), CycleLawParams{std::exp(1.0)}, EnvelopeParams{});
  CHECK(band.central == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(band.lower <= band.central);
  CHECK(band.upper >= band.central);

  double prev = 1e300;
  double prev_width = 1e300;
  for (double lt = 1.5; lt < 600.0; lt *= 1.5) {
    const auto b = t_tail_envelope(std::exp(lt), CycleLawParams{2.0}, EnvelopeParams{});
    REQUIRE(b.central < prev);
    const double width = (b.upper - b.lower) / b.central;
    if (lt > 20.0) {
      REQUIRE(width < prev_width);
      prev_width = width;
    }
    prev = b.central;
  }
  CHECK_THROWS_AS(t_tail_envelope(2.0, CycleLawParams{2.0}, EnvelopeParams{}), Error);

  EnvelopeParams zero;
  zero.epsilon = 0.0;
  const auto lower = t_lower_tail_envelope(0.2, CycleLawParams{2.0}, zero);
  CHECK(lower.lower == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
  CHECK(lower.upper == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
  for (double t : {1e-3, 0.05, 0.2, 1.0}) {
    const auto b = t_lower_tail_envelope(t, CycleLawParams{2.0}, EnvelopeParams{});
    CHECK(b.upper >= b.lower);
  }
  CHECK(t_lower_tail_envelope(1e-4, CycleLawParams{2.0}, EnvelopeParams{}).upper < 1e-100);
}

TEST_CASE("envelope parameters") {
  const auto resolved = EnvelopeParams{}.resolved(CycleLawParams{2.0});
  CHECK(resolved.K == doctest::Approx(2.0 * std::sqrt(6.0)).epsilon(1e-15));
  CHECK(resolved.K_prime == doctest::Approx(resolved.K / 2.0));
  EnvelopeParams bad;
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(bad.resolved(CycleLawParams{2.0}), Error);
}

TEST_CASE("iterated logarithm") {
  CHECK(iterated_log(1, 0.5) == 0.0);
  CHECK(iterated_log(3, std::exp(std::exp(std::exp(1.0)))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iterated_log(2, std::exp(10.0)) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK(iterated_log_from_log(2, 10.0) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  for (double t : {0.0, 0.1, 1.0, 2.0, 1e9})
    for (int k = 1; k <= 4; ++k) CHECK(iterated_log(k, t) >= 0.0);
}
