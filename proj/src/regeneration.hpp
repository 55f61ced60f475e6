#ifndef MOUSTACHE_REGENERATION_HPP
#define MOUSTACHE_REGENERATION_HPP

// Regeneration cycles of R and the renewal sequence they generate.
//
// Started from R(0) = 1, a cycle runs until R first hits r (time H), then
// until R attains its future minimum A in (1, r) (time T). Rescaled cycles
// are i.i.d., which gives the representation
//
//     T_n = T'_1 + A'_1^2 T'_2 + ... + (A'_1 ... A'_{n-1})^2 T'_n,
//     A_n = A'_1 ... A'_n,
//
// assembled here entirely in log domain.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "laws.hpp"
#include "rng.hpp"
#include "sde.hpp"

namespace moustache {

struct CycleRecord {
  double H = 0.0;  // first hitting time of r
  double T = 0.0;  // time of the future-minimum record
  double A = 0.0;  // record value, in (1, r)
  double B = 0.0;  // running maximum over [H, T]
  double U = 0.0;  // ln A / ln r
  double V = 0.0;  // ln B / ln r
  int k = 0;       // the cycle was closed when R reached r^k
  double err_bound = 0.0;  // probability that (A, T) is not final: U / k

  /// T == H, which only a coarse discretization produces.
  bool degenerate() const { return T == H; }
  void check_invariants(const CycleLawParams& params) const;
};

struct CyclePool {
  std::vector<CycleRecord> records;
  CycleLawParams params;
  int k = 0;
  std::string cfg_fingerprint;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  void check_invariants() const;
};

struct RenewalSequence {
  double r = 2.0;
  std::vector<double> U;     // cycle exponents U_i
  std::vector<double> lnTp;  // ln T'_i
  std::vector<double> lnA;   // ln A_i = ln r (U_1 + ... + U_i)
  std::vector<double> lnT;   // ln T_i
  std::vector<double> lnS;   // ln S_i = ln T_i - 2 ln A_i
  std::vector<double> S;

  std::size_t n() const { return U.size(); }
};

/// Fingerprint of the integrator settings a pool was simulated with.
std::string fingerprint(const IntegratorConfig& cfg);

/// Simulates one cycle from R(0) = 1 with hybrid natural/geometric time and
/// closes it once R reaches r^k.
CycleRecord simulate_cycle(const CycleLawParams& params, int k, const IntegratorConfig& cfg, RngStream& rng);

/// Cycle i uses RngStream(cfg.seed, i); the result does not depend on workers.
CyclePool sample_cycle_pool(const CycleLawParams& params, int k, std::size_t n, const IntegratorConfig& cfg,
                            unsigned workers);

struct CycleDraw {
  double U;
  double lnTp;
};
using CycleSampler = std::function<CycleDraw(RngStream&)>;

/// Log-domain renewal recursion over explicit draws.
RenewalSequence assemble_from_draws(double r, std::span<const double> U, std::span<const double> lnTp);

/// Bootstrap assembly: n draws with replacement from the pool.
RenewalSequence assemble_renewal(const CyclePool& pool, std::size_t n, RngStream& rng);
/// Assembly from a live cycle sampler.
RenewalSequence assemble_renewal(double r, const CycleSampler& sampler, std::size_t n, RngStream& rng);
/// Identity draws: pool records [offset, offset + n) in order.
RenewalSequence assemble_in_order(const CyclePool& pool, std::size_t offset, std::size_t n);

/// S_i = T_i / A_i^2.
std::vector<double> s_sequence(const RenewalSequence& seq);
/// max_i |S_i - (alpha_i S_{i-1} + beta_i)| / S_i with alpha_i = r^{-2 U_i},
/// beta_i = T'_i r^{-2 U_i}, evaluated in linear arithmetic.
double s_recursion_residual(const RenewalSequence& seq);

/// An envelope t -> f(t) supplied as ln t -> ln f(t), so that it can be
/// evaluated at times far beyond the double range.
using LogEnvelope = std::function<double(double)>;

LogEnvelope sqrt_envelope();
/// exp(ln t * g(ln_2 t)).
LogEnvelope power_envelope(std::function<double(double)> g);
/// K sqrt(t ln_3 t).
LogEnvelope escape_envelope(double K);

enum class CrossingSide { below, above };

struct CrossingReport {
  std::size_t count = 0;
  std::vector<std::size_t> indices;  // 1-based cycle numbers
  std::vector<double> margins;       // ln A_i - ln f(T_i) at each crossing
  std::size_t checked = 0;
};

/// Compares A_i with f(T_i) for cycle numbers first..last (1-based,
/// inclusive) and reports where A_i is on the requested side. Where f
/// vanishes the margin is +inf.
CrossingReport future_min_envelope(const RenewalSequence& seq, const LogEnvelope& envelope, CrossingSide side,
                                   std::size_t first, std::size_t last);

/// ln A_i - ln f(T_i) for every i.
std::vector<double> envelope_margins(const RenewalSequence& seq, const LogEnvelope& envelope);

struct RenewalPoint {
  double T;
  double A;
};

/// Reference simulation of the first n renewal points along one long path
/// (no cycle rescaling), for law comparisons with the assembled sequence.
/// The path is integrated until R >= r^(n + end_margin); minima inside each
/// step are drawn from the Brownian bridge.
std::vector<RenewalPoint> simulate_renewal_direct(const CycleLawParams& params, std::size_t n, int end_margin,
                                                  const IntegratorConfig& cfg, RngStream& rng);

}  // namespace moustache

#endif
