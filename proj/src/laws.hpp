#ifndef MOUSTACHE_LAWS_HPP
#define MOUSTACHE_LAWS_HPP

// Closed-form laws of the regeneration cycle and of the long-time limit.
//
// A cycle started at R(0) = 1 with ratio r > 1 has record value A = r^U and
// running maximum B = r^V, where (U, V) has density (1-u)/(v-u)^2 on
// 0 < u < 1 < v. These functions are the exact oracles the simulation is
// checked against.

#include <utility>

#include "rng.hpp"

namespace moustache {

struct CycleLawParams {
  double r = 2.0;

  void validate() const;
  double log_r() const;
};

/// Free constants of the tail envelopes. Only existence is known for C and
/// epsilon, so they are diagnostic knobs.
struct EnvelopeParams {
  double C = 5.0;
  double epsilon = 0.1;
  double K = 0.0;        // 0 selects r * sqrt(2 (r+1) / (r-1))
  double K_prime = 0.0;  // 0 selects K / 2
  double beta = 1.0;

  /// Fills in the r-dependent defaults and checks the invariants.
  EnvelopeParams resolved(const CycleLawParams& params) const;
};

/// r * sqrt(2 (r+1) / (r-1)): the explicit upper escape constant.
double escape_constant(double r);

// --- (U, V) --------------------------------------------------------------

double density_uv(double u, double v);
/// P(V <= v | U = u) for v > 1.
double conditional_cdf_v(double v, double u);
/// Inverse of conditional_cdf_v: maps q in (0,1) to v.
double conditional_quantile_v(double q, double u);
/// Deterministic core of sample_uv: (u, q) -> (u, v).
std::pair<double, double> uv_from_uniforms(double u, double q);
std::pair<double, double> sample_uv(const CycleLawParams& params, RngStream& rng);

/// Density of V: -ln(1 - 1/v) - 1/v on v > 1.
double density_v(double v);
/// P(V > v) for v >= 1.
double tail_v(double v);
/// The defining series sum_{n>=1} 1/(n (n+1) v^n), summed until the terms
/// drop below 1e-16 (at least 30 terms, at most max_terms).
double tail_v_series(double v, int max_terms = 1000000);

// --- future minimum and exit problem -------------------------------------

/// P(min_{t>=0} R(t) <= a | R(0) = b) = ln a / ln b for 1 < a < b.
double future_min_cdf(double a, double b);
double sample_future_min(double b, RngStream& rng);

/// P_{r0}[tau(b) < tau(a)] for 1 < a <= r0 <= b.
double exit_prob(double a, double r0, double b);

// --- Rayleigh limit -------------------------------------------------------

double rayleigh_pdf(double x);
double rayleigh_cdf(double x);
double rayleigh_quantile(double q);
double rayleigh_sample(RngStream& rng);

// --- bounds and envelopes --------------------------------------------------

/// Bound on P[2 (U_1 + ... + U_i) >= c i], c >= 1.
double hoeffding_upper(int i, double c);
/// Bound on P[2 (U_1 + ... + U_i) <= b i], b <= 1.
double hoeffding_lower(int i, double b);

struct TailBand {
  double lower;
  double central;
  double upper;
};

/// Band around P[T >= t] ~ ln r / ln t with relative width (ln_3 t + C)/ln t.
TailBand t_tail_envelope(double t, const CycleLawParams& params, const EnvelopeParams& env);

struct LowerTailBand {
  double lower;
  double upper;
};

/// exp(-(r-1+eps)^2 / 2t) <= P[T <= t] <= exp(-(r-1-eps)^2 / 2t) for small t.
LowerTailBand t_lower_tail_envelope(double t, const CycleLawParams& params, const EnvelopeParams& env);

/// ln_k(t) with ln_1(t) = ln(max(t, 1)); never negative.
double iterated_log(int k, double t);
/// ln_k(t) evaluated from ln t, for t too large to represent.
double iterated_log_from_log(int k, double log_t);

}  // namespace moustache

#endif
