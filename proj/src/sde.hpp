#ifndef MOUSTACHE_SDE_HPP
#define MOUSTACHE_SDE_HPP

// Euler-Maruyama integration of the radial process R of planar Brownian
// motion conditioned to avoid the unit disk,
//
//     dR = (1/(R ln R) + 1/(2R)) dt + dB,
//
// of its geometric-time transform X(s) = e^{-s/2} R(e^s - 1), and of Bessel
// processes. Every scheme uses a state-dependent step: the base step is
// capped so that one drift displacement never exceeds `step_scale` times the
// distance to the nearest singular point, and proposals landing within
// `boundary_guard` of that point are rejected and retried with half the step
// and fresh noise.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "rng.hpp"

namespace moustache {

enum class PathKind { R, X, bessel };

struct StepStats {
  double min_step = 0.0;
  double max_step = 0.0;
  double mean_step = 0.0;
};

/// A discretized sample path. `times` is natural time for R and Bessel
/// paths and absolute geometric time for X paths.
struct TrajectoryGrid {
  std::vector<double> times;
  std::vector<double> values;
  PathKind kind = PathKind::R;
  double dimension = 0.0;  // Bessel dimension; unused otherwise
  StepStats step_stats;

  std::size_t size() const { return times.size(); }
  double back_time() const { return times.back(); }
  double back_value() const { return values.back(); }

  void push(double t, double v) {
    times.push_back(t);
    values.push_back(v);
  }

  /// Recomputes step_stats from the time grid.
  void refresh_step_stats();

  /// Throws Error(invalid_argument) when the grid breaks its invariants.
  void check_invariants() const;
};

struct IntegratorConfig {
  double dt_natural = 1e-3;
  double dt_geometric = 1e-2;
  double boundary_guard = 1e-6;
  int max_halvings = 40;
  /// Upper bound on (drift displacement) / (distance to singularity).
  double step_scale = 0.02;
  std::uint64_t seed = 20210607;

  void validate() const;
};

struct CoupledTriple {
  TrajectoryGrid bes2;
  TrajectoryGrid r;
  TrajectoryGrid bes2d;
  double delta = 0.0;
  /// Grid index of the last time with r <= e^{2/delta}; empty when r never
  /// exceeded that level on the grid (the switch has not occurred yet).
  std::optional<std::size_t> switch_index;
  std::optional<double> switch_time;
};

TrajectoryGrid integrate_r(double r0, double horizon, const IntegratorConfig& cfg, RngStream& noise);

TrajectoryGrid integrate_x(double x0, double s_horizon, double s_origin, const IntegratorConfig& cfg,
                           RngStream& noise);

TrajectoryGrid integrate_bessel(double dimension, double x0, double horizon, const IntegratorConfig& cfg,
                                RngStream& noise);

/// R(u) = sqrt(1+u) X(ln(1+u)).
TrajectoryGrid to_natural(const TrajectoryGrid& x_path);
/// X(s) = e^{-s/2} R(e^s - 1).
TrajectoryGrid to_geometric(const TrajectoryGrid& r_path);

/// BES^2, R and BES^{2+delta} started at 1 and driven by the same Brownian
/// increments on a shared grid.
CoupledTriple coupled_triple(double delta, double horizon, const IntegratorConfig& cfg, RngStream& noise);

/// Number of grid points with bes2 > r.
std::size_t lower_coupling_violations(const CoupledTriple& triple);

/// Number of grid points after the switch index where r[i] - bes2d[i]
/// exceeds max(r[switch] - bes2d[switch], 0) by more than
/// tolerance_per_step * (i - switch). When bes2d[switch] <= r[switch] this
/// is the increment bound r[i] - r[switch] <= bes2d[i] - bes2d[switch].
std::size_t upper_coupling_violations(const CoupledTriple& triple, double tolerance_per_step);

/// First time the linearly interpolated path meets `level`.
std::optional<double> first_hitting(const TrajectoryGrid& path, double level);

/// `time,value` CSV with 17 significant digits.
void write_csv(const TrajectoryGrid& path, std::ostream& out);

/// Levels that drive the natural/geometric mode switch of HybridRadialPath.
struct HybridLevels {
  /// Geometric mode hands over to natural time once R drops below this.
  double natural_below = 1.5;
  /// Natural mode hands over to geometric time once R reaches this.
  double geometric_above = 3.0;
};

/**
 * Integrator for R that alternates between natural time and geometric time.
 *
 * Natural time is used while R is low (close to the singular boundary or
 * to a caller-defined level of interest); geometric time takes over for
 * excursions to large heights, where reaching height h costs O(ln h)
 * geometric time instead of O(h^2) natural time. In geometric mode the step
 * shrinks towards the natural-time resolution as the path approaches
 * `natural_below`, so the hand-over happens with a small overshoot. Dips of
 * X below kLogStepBelow are stepped in ln X.
 *
 * Natural time is carried as anchor + local offset so that local steps stay
 * resolvable when the anchor is astronomically large.
 */
class HybridRadialPath {
 public:
  HybridRadialPath(double r0, const IntegratorConfig& cfg, HybridLevels levels);

  void set_levels(HybridLevels levels) { levels_ = levels; }
  const HybridLevels& levels() const { return levels_; }

  bool geometric() const { return geometric_; }
  double value() const;
  double log_value() const { return log_r_; }
  /// Overflows to infinity beyond geometric time ~709.
  double natural_time() const;
  double geometric_time() const;
  /// X = R / sqrt(1 + u).
  double scaled_value() const;
  /// Size of the last step in natural time (only meaningful in natural mode).
  double last_natural_step() const { return last_step_; }
  std::size_t mode_switches() const { return switches_; }
  std::size_t steps() const { return steps_; }

  /// Advances by one accepted step without passing geometric time `s_end`
  /// (natural time e^{s_end} - 1). Returns false, without stepping, once the
  /// path sits at s_end.
  bool advance(RngStream& noise, double s_end = std::numeric_limits<double>::infinity());

  /// Moves the natural-mode state back by dt_back in time, to new_value
  /// (used after sub-step refinement of the last step).
  void rewind(double dt_back, double new_value);

 private:
  void maybe_switch();
  void to_natural_mode();

  const IntegratorConfig* cfg_;
  HybridLevels levels_;
  bool geometric_ = false;
  double anchor_u_ = 0.0;
  double local_u_ = 0.0;
  double r_ = 1.0;
  double s_ = 0.0;
  double s_lo_ = 0.0;  // compensation term of s_
  double x_ = 1.0;
  double log_r_ = 0.0;
  double last_step_ = 0.0;
  std::size_t switches_ = 0;
  std::size_t steps_ = 0;
};

namespace detail {

struct Step {
  double value;
  double dt;
};

double radial_drift(double r, double log_r);
double geometric_drift(double x, double log_r);
double bessel_drift(double dimension, double x);

/// Natural-time step of R from r (log_r = ln r) with base step h.
Step natural_step(double r, double log_r, double h, const IntegratorConfig& cfg, RngStream& noise);
/// Geometric-time step of X from x at absolute geometric time s. The drift
/// cap is not applied below min_step; with min_step > 0 a step that no
/// longer advances s is an error.
Step geometric_step(double x, double s, double log_r, double h, const IntegratorConfig& cfg,
                    RngStream& noise, double min_step = 0.0);
/// Below this X the hybrid path steps in ln X instead.
inline constexpr double kLogStepBelow = 1e-3;
/// Largest ln X standard deviation per step, relative to the depth below
/// kLogStepBelow and to the ln R distance to the nearest level.
inline constexpr double kLogStepFraction = 0.25;

/// Geometric-time step of X taken in ln X, for X below kLogStepBelow. In the
/// clock tau with d tau = ds / X^2, ln X is a Brownian motion with drift
/// 1/ln R - X^2/2, so the step in tau may grow with the depth of the dip
/// instead of staying proportional to X^2 in s. log_level is the ln R level
/// the step must not jump across (0 for the unit circle).
Step log_geometric_step(double x, double s, double log_r, double h, double log_level, const IntegratorConfig& cfg,
                        RngStream& noise);
Step bessel_step(double dimension, double x, double h, const IntegratorConfig& cfg, RngStream& noise);

/// Exact sample of the minimum of a Brownian bridge from a to b over time h.
double bridge_minimum(double a, double b, double h, double uniform);

/// Starting value of R: r0 lifted to at least the entrance displacement 1 + guard.
double entrance_value(double r0, const IntegratorConfig& cfg);

}  // namespace detail

}  // namespace moustache

#endif
