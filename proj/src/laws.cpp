#include "laws.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace moustache {

void CycleLawParams::validate() const { require(std::isfinite(r) && r > 1.0, "cycle ratio r must be > 1"); }

double CycleLawParams::log_r() const { return std::log(r); }

double escape_constant(double r) { return r * std::sqrt(2.0 * (r + 1.0) / (r - 1.0)); }

EnvelopeParams EnvelopeParams::resolved(const CycleLawParams& params) const {
  params.validate();
  EnvelopeParams out = *this;
  if (out.K == 0.0) out.K = escape_constant(params.r);
  if (out.K_prime == 0.0) out.K_prime = 0.5 * out.K;
  require(out.C >= 0.0, "envelope C must be >= 0");
  require(out.epsilon > 0.0 && out.epsilon < params.r - 1.0, "envelope epsilon must lie in (0, r-1)");
  require(out.K > out.K_prime && out.K_prime > 0.0, "envelope constants need K > K' > 0");
  require(out.beta > 0.0, "envelope beta must be > 0");
  return out;
}

double density_uv(double u, double v) {
  if (!(u > 0.0 && u < 1.0 && v > 1.0)) return 0.0;
  const double d = v - u;
  return (1.0 - u) / (d * d);
}

double conditional_cdf_v(double v, double u) {
  if (v <= 1.0) return 0.0;
  return 1.0 - (1.0 - u) / (v - u);
}

double conditional_quantile_v(double q, double u) { return u + (1.0 - u) / (1.0 - q); }

std::pair<double, double> uv_from_uniforms(double u, double q) { return {u, conditional_quantile_v(q, u)}; }

std::pair<double, double> sample_uv(const CycleLawParams& params, RngStream& rng) {
  params.validate();
  const double u = rng.uniform();
  const double q = rng.uniform();  // open interval: q = 1 never occurs
  return uv_from_uniforms(u, q);
}

double density_v(double v) {
  if (!(v > 1.0)) return 0.0;
  return -std::log1p(-1.0 / v) - 1.0 / v;
}

double tail_v(double v) {
  require(v >= 1.0, "tail_v: v must be >= 1");
  if (v == 1.0) return 1.0;
  if (std::isinf(v)) return 0.0;
  // 1 + (v-1) ln(1 - 1/v), with ln(1 - 1/v) = ln(v-1) - ln v split so that
  // nothing cancels as v -> 1.
  const double d = v - 1.0;
  if (d < 0.5) return 1.0 + d * (std::log(d) - std::log1p(d));
  return 1.0 + d * std::log1p(-1.0 / v);
}

double tail_v_series(double v, int max_terms) {
  require(v >= 1.0, "tail_v_series: v must be >= 1");
  const double w = 1.0 / v;
  double power = 1.0;
  double sum = 0.0;
  for (int n = 1; n <= max_terms; ++n) {
    power *= w;
    const double term = power / (static_cast<double>(n) * (n + 1.0));
    sum += term;
    if (n >= 30 && term < 1e-16) break;
  }
  return sum;
}

double future_min_cdf(double a, double b) {
  require(b > 1.0, "future_min_cdf: b must be > 1");
  if (a <= 1.0) return 0.0;
  if (a >= b) return 1.0;
  return std::log(a) / std::log(b);
}

double sample_future_min(double b, RngStream& rng) {
  require(std::isfinite(b) && b > 1.0, "sample_future_min: b must be > 1");
  for (;;) {
    const double m = std::exp(rng.uniform() * std::log(b));
    if (m > 1.0 && m < b) return m;
  }
}

double exit_prob(double a, double r0, double b) {
  require(a > 1.0 && a < b && a <= r0 && r0 <= b, "exit_prob: need 1 < a <= r0 <= b with a < b");
  if (r0 == a) return 0.0;
  if (r0 == b) return 1.0;
  return (std::log(r0 / a) * std::log(b)) / (std::log(b / a) * std::log(r0));
}

double rayleigh_pdf(double x) { return x > 0.0 ? x * std::exp(-0.5 * x * x) : 0.0; }

double rayleigh_cdf(double x) { return x > 0.0 ? -std::expm1(-0.5 * x * x) : 0.0; }

double rayleigh_quantile(double q) {
  require(q >= 0.0 && q < 1.0, "rayleigh_quantile: q must lie in [0, 1)");
  return std::sqrt(-2.0 * std::log1p(-q));
}

double rayleigh_sample(RngStream& rng) { return rayleigh_quantile(rng.uniform()); }

double hoeffding_upper(int i, double c) {
  require(i >= 1 && c >= 1.0, "hoeffding_upper: need i >= 1, c >= 1");
  return std::exp(-0.5 * i * (c - 1.0) * (c - 1.0));
}

double hoeffding_lower(int i, double b) {
  require(i >= 1 && b <= 1.0, "hoeffding_lower: need i >= 1, b <= 1");
  return std::exp(-0.5 * i * (1.0 - b) * (1.0 - b));
}

TailBand t_tail_envelope(double t, const CycleLawParams& params, const EnvelopeParams& env) {
  params.validate();
  require(t > std::exp(1.0), "t_tail_envelope: t must exceed e");
  require(env.C >= 0.0, "t_tail_envelope: C must be >= 0");
  const double log_t = std::log(t);
  const double central = params.log_r() / log_t;
  const double band = (iterated_log(3, t) + env.C) / log_t;
  return {std::max(0.0, (1.0 - band) * central), central, (1.0 + band) * central};
}

LowerTailBand t_lower_tail_envelope(double t, const CycleLawParams& params, const EnvelopeParams& env) {
  params.validate();
  require(t > 0.0, "t_lower_tail_envelope: t must be > 0");
  require(env.epsilon >= 0.0 && env.epsilon < params.r - 1.0,
          "t_lower_tail_envelope: epsilon must lie in [0, r-1)");
  const double lo = params.r - 1.0 + env.epsilon;
  const double hi = params.r - 1.0 - env.epsilon;
  return {std::exp(-lo * lo / (2.0 * t)), std::exp(-hi * hi / (2.0 * t))};
}

double iterated_log(int k, double t) {
  require(k >= 1, "iterated_log: k must be >= 1");
  double v = t;
  for (int i = 0; i < k; ++i) v = std::log(std::max(v, 1.0));
  return v;
}

double iterated_log_from_log(int k, double log_t) {
  require(k >= 1, "iterated_log_from_log: k must be >= 1");
  double v = std::max(log_t, 0.0);
  for (int i = 1; i < k; ++i) v = std::log(std::max(v, 1.0));
  return v;
}

}  // namespace moustache
