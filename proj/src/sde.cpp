#include "sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "error.hpp"

namespace moustache {

void TrajectoryGrid::refresh_step_stats() {
  step_stats = StepStats{};
  if (times.size() < 2) return;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    lo = std::min(lo, dt);
    hi = std::max(hi, dt);
  }
  step_stats.min_step = lo;
  step_stats.max_step = hi;
  step_stats.mean_step = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

void TrajectoryGrid::check_invariants() const {
  require(!times.empty(), "trajectory is empty");
  require(times.size() == values.size(), "trajectory times/values length mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "trajectory times are not strictly increasing");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    require(std::isfinite(v), "trajectory value is not finite");
    switch (kind) {
      case PathKind::R:
        require(i == 0 ? v >= 1.0 : v > 1.0, "R path touches the unit disk");
        break;
      case PathKind::X:
        require(v > 0.0, "X path is not positive");
        break;
      case PathKind::bessel:
        require(v >= 0.0, "Bessel path is negative");
        break;
    }
  }
}

void IntegratorConfig::validate() const {
  require(dt_natural > 0.0 && std::isfinite(dt_natural), "dt_natural must be positive");
  require(dt_geometric > 0.0 && std::isfinite(dt_geometric), "dt_geometric must be positive");
  require(boundary_guard > 0.0 && boundary_guard < 1.0, "boundary_guard must lie in (0, 1)");
  require(max_halvings >= 1, "max_halvings must be at least 1");
  require(step_scale > 0.0 && step_scale <= 1.0, "step_scale must lie in (0, 1]");
}

namespace detail {

double radial_drift(double r, double log_r) { return 1.0 / (r * log_r) + 0.5 / r; }

double geometric_drift(double x, double log_r) { return 0.5 / x - 0.5 * x + 1.0 / (x * log_r); }

double bessel_drift(double dimension, double x) { return 0.5 * (dimension - 1.0) / x; }

namespace {

double drift_cap(double distance, double drift, double scale) {
  const double b = std::abs(drift);
  return b > 0.0 ? scale * distance / b : std::numeric_limits<double>::infinity();
}

[[noreturn]] void exhausted(ErrorCode code, const char* what, double at) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s (value %.17g): step halving exhausted", what, at);
  fail(code, buf);
}

void check_finite(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::non_finite, "integrator produced a non-finite value");
}

}  // namespace

Step natural_step(double r, double log_r, double h, const IntegratorConfig& cfg, RngStream& noise) {
  const double b = radial_drift(r, log_r);
  h = std::min(h, drift_cap(r - 1.0, b, cfg.step_scale));
  const double floor = 1.0 + cfg.boundary_guard;
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    const double v = r + h * b + std::sqrt(h) * noise.normal();
    check_finite(v);
    if (v > floor) return {v, h};
    h *= 0.5;
  }
  exhausted(ErrorCode::halving_exhausted, "R near the unit circle", r);
}

Step geometric_step(double x, double s, double log_r, double h, const IntegratorConfig& cfg,
                    RngStream& noise, double min_step) {
  if (!(log_r > 0.0)) fail(ErrorCode::drift_underflow, "X drift denominator ln X + s/2 is not positive");
  const double b = geometric_drift(x, log_r);
  // Distance from X to the image of the unit circle, e^{-s/2}.
  const double distance = -x * std::expm1(-log_r);
  h = std::min(h, std::max(drift_cap(distance, b, cfg.step_scale), min_step));
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    const double v = x + h * b + std::sqrt(h) * noise.normal();
    check_finite(v);
    const double floor = (1.0 + cfg.boundary_guard) * std::exp(-0.5 * (s + h));
    if (v > floor) {
      if (min_step > 0.0 && s + h == s) break;
      return {v, h};
    }
    h *= 0.5;
  }
  exhausted(ErrorCode::drift_underflow, "X path represents R near the unit circle", x);
}

Step log_geometric_step(double x, double s, double log_r, double h, double log_level, const IntegratorConfig& cfg,
                        RngStream& noise) {
  if (!(log_r > 0.0)) fail(ErrorCode::drift_underflow, "X drift denominator ln X + s/2 is not positive");
  const double y = std::log(x);
  // Standard deviation of ln X over one step: the drift-capped base value,
  // growing with the depth below kLogStepBelow but never beyond a fraction
  // of the distance in ln R to the nearest level of interest. Near a level
  // the step bottoms out at natural-time resolution, dt_natural / R^2 in tau.
  const double depth = std::log(kLogStepBelow) - y;
  const double room = log_r - std::max(log_level, 0.0);
  const double sigma = std::min(std::max(std::sqrt(2.0 * cfg.step_scale), kLogStepFraction * depth),
                                kLogStepFraction * room);
  const double resolution = cfg.dt_natural * std::exp(-2.0 * log_r);
  double tau = std::min({std::max(sigma * sigma, resolution), cfg.step_scale * log_r * log_r, h / (x * x)});
  const double mu = 1.0 / log_r - 0.5 * x * x;
  const double floor = std::log1p(cfg.boundary_guard);
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    const double y_next = y + mu * tau + std::sqrt(tau) * noise.normal();
    const double ds = x * x * tau;
    check_finite(y_next);
    if (y_next + 0.5 * (s + ds) > floor) return {std::exp(y_next), ds};
    tau *= 0.5;
  }
  exhausted(ErrorCode::drift_underflow, "X path represents R near the unit circle", x);
}

Step bessel_step(double dimension, double x, double h, const IntegratorConfig& cfg, RngStream& noise) {
  const double b = bessel_drift(dimension, x);
  h = std::min(h, drift_cap(x, b, cfg.step_scale));
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    const double v = x + h * b + std::sqrt(h) * noise.normal();
    check_finite(v);
    if (v > cfg.boundary_guard) return {v, h};
    h *= 0.5;
  }
  exhausted(ErrorCode::halving_exhausted, "Bessel path near 0", x);
}

double bridge_minimum(double a, double b, double h, double uniform) {
  const double d = b - a;
  return 0.5 * (a + b - std::sqrt(d * d - 2.0 * h * std::log(uniform)));
}

double entrance_value(double r0, const IntegratorConfig& cfg) {
  return std::max(r0, 1.0 + cfg.boundary_guard);
}

}  // namespace detail

namespace {

// Advances t by a step of size dt that was capped at `remaining`; lands
// exactly on the horizon when the full remainder was taken.
double advance_time(double t, double dt, double remaining, double horizon) {
  return dt >= remaining ? horizon : t + dt;
}

}  // namespace

TrajectoryGrid integrate_r(double r0, double horizon, const IntegratorConfig& cfg, RngStream& noise) {
  cfg.validate();
  require(std::isfinite(r0) && r0 >= 1.0, "integrate_r: r0 must be >= 1");
  require(std::isfinite(horizon) && horizon >= 0.0, "integrate_r: horizon must be >= 0");
  TrajectoryGrid path;
  path.kind = PathKind::R;
  path.push(0.0, r0);
  double r = detail::entrance_value(r0, cfg);
  double log_r = std::log1p(r - 1.0);
  double t = 0.0;
  while (t < horizon) {
    const double remaining = horizon - t;
    const auto st = detail::natural_step(r, log_r, std::min(cfg.dt_natural, remaining), cfg, noise);
    t = advance_time(t, st.dt, remaining, horizon);
    r = st.value;
    log_r = std::log1p(r - 1.0);
    path.push(t, r);
  }
  path.refresh_step_stats();
  return path;
}

TrajectoryGrid integrate_x(double x0, double s_horizon, double s_origin, const IntegratorConfig& cfg,
                           RngStream& noise) {
  cfg.validate();
  require(std::isfinite(x0) && x0 > 0.0, "integrate_x: x0 must be > 0");
  require(std::isfinite(s_horizon) && s_horizon >= 0.0, "integrate_x: s_horizon must be >= 0");
  require(std::isfinite(s_origin) && s_origin >= 0.0, "integrate_x: s_origin must be >= 0");
  TrajectoryGrid path;
  path.kind = PathKind::X;
  path.push(s_origin, x0);
  if (s_horizon == 0.0) return path;

  double x = x0;
  double log_r = std::log(x0) + 0.5 * s_origin;
  if (std::abs(log_r) <= cfg.boundary_guard) {
    // The X path starts on the unit circle: entrance displacement.
    log_r = std::log1p(cfg.boundary_guard);
    x = std::exp(log_r - 0.5 * s_origin);
  } else if (log_r < 0.0) {
    fail(ErrorCode::drift_underflow, "integrate_x: ln x0 + s_origin/2 must be positive");
  }
  const double s_end = s_origin + s_horizon;
  double s = s_origin;
  while (s < s_end) {
    const double remaining = s_end - s;
    // Near X = 0 the cap shrinks like x^2; keep grid times distinct.
    const double min_step = std::min(remaining, 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, s));
    const auto st =
        detail::geometric_step(x, s, log_r, std::min(cfg.dt_geometric, remaining), cfg, noise, min_step);
    s = advance_time(s, st.dt, remaining, s_end);
    x = st.value;
    log_r = std::log(x) + 0.5 * s;
    path.push(s, x);
  }
  path.refresh_step_stats();
  return path;
}

TrajectoryGrid integrate_bessel(double dimension, double x0, double horizon, const IntegratorConfig& cfg,
                                RngStream& noise) {
  cfg.validate();
  require(std::isfinite(dimension) && dimension >= 2.0, "integrate_bessel: dimension must be >= 2");
  require(std::isfinite(x0) && x0 >= 0.0, "integrate_bessel: x0 must be >= 0");
  require(std::isfinite(horizon) && horizon >= 0.0, "integrate_bessel: horizon must be >= 0");
  TrajectoryGrid path;
  path.kind = PathKind::bessel;
  path.dimension = dimension;
  path.push(0.0, x0);
  double x = std::max(x0, cfg.boundary_guard);
  double t = 0.0;
  while (t < horizon) {
    const double remaining = horizon - t;
    const auto st = detail::bessel_step(dimension, x, std::min(cfg.dt_natural, remaining), cfg, noise);
    t = advance_time(t, st.dt, remaining, horizon);
    x = st.value;
    path.push(t, x);
  }
  path.refresh_step_stats();
  return path;
}

TrajectoryGrid to_natural(const TrajectoryGrid& x_path) {
  require(!x_path.times.empty(), "to_natural: empty path");
  require(x_path.kind == PathKind::X, "to_natural: expects an X path");
  TrajectoryGrid out;
  out.kind = PathKind::R;
  out.times.reserve(x_path.size());
  out.values.reserve(x_path.size());
  for (std::size_t i = 0; i < x_path.size(); ++i) {
    const double s = x_path.times[i];
    out.push(std::expm1(s), x_path.values[i] * std::exp(0.5 * s));
  }
  out.refresh_step_stats();
  return out;
}

TrajectoryGrid to_geometric(const TrajectoryGrid& r_path) {
  require(!r_path.times.empty(), "to_geometric: empty path");
  require(r_path.kind != PathKind::X, "to_geometric: path is already geometric");
  require(r_path.times.front() >= 0.0, "to_geometric: natural times must be >= 0");
  TrajectoryGrid out;
  out.kind = PathKind::X;
  out.times.reserve(r_path.size());
  out.values.reserve(r_path.size());
  for (std::size_t i = 0; i < r_path.size(); ++i) {
    const double u = r_path.times[i];
    const double s = std::log1p(u);
    out.push(s, r_path.values[i] * std::exp(-0.5 * s));
  }
  out.refresh_step_stats();
  return out;
}

CoupledTriple coupled_triple(double delta, double horizon, const IntegratorConfig& cfg, RngStream& noise) {
  cfg.validate();
  require(std::isfinite(delta) && delta > 0.0, "coupled_triple: delta must be > 0");
  require(std::isfinite(horizon) && horizon >= 0.0, "coupled_triple: horizon must be >= 0");
  CoupledTriple out;
  out.delta = delta;
  out.bes2.kind = PathKind::bessel;
  out.bes2.dimension = 2.0;
  out.bes2d.kind = PathKind::bessel;
  out.bes2d.dimension = 2.0 + delta;
  out.r.kind = PathKind::R;
  out.bes2.push(0.0, 1.0);
  out.r.push(0.0, 1.0);
  out.bes2d.push(0.0, 1.0);

  const double dim_hi = 2.0 + delta;
  double lo = 1.0;                                     // BES^2
  double r = detail::entrance_value(1.0, cfg);         // R
  double hi = 1.0;                                     // BES^{2+delta}
  double log_r = std::log1p(r - 1.0);
  const double r_floor = 1.0 + cfg.boundary_guard;
  double t = 0.0;
  while (t < horizon) {
    const double remaining = horizon - t;
    const double b_lo = detail::bessel_drift(2.0, lo);
    const double b_r = detail::radial_drift(r, log_r);
    const double b_hi = detail::bessel_drift(dim_hi, hi);
    // step_scale <= 1 keeps h <= 2 lo^2, where x -> x + h/(2x) is increasing:
    // this is what makes the discrete scheme preserve BES^2 <= R.
    double h = std::min({cfg.dt_natural, remaining, cfg.step_scale * lo / b_lo,
                         cfg.step_scale * (r - 1.0) / b_r, cfg.step_scale * hi / b_hi});
    bool accepted = false;
    for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
      const double dw = std::sqrt(h) * noise.normal();
      const double lo_new = lo + h * b_lo + dw;
      const double r_new = r + h * b_r + dw;
      const double hi_new = hi + h * b_hi + dw;
      if (!std::isfinite(lo_new) || !std::isfinite(r_new) || !std::isfinite(hi_new))
        fail(ErrorCode::non_finite, "coupled_triple produced a non-finite value");
      if (lo_new > cfg.boundary_guard && r_new > r_floor && hi_new > cfg.boundary_guard) {
        t = advance_time(t, h, remaining, horizon);
        lo = lo_new;
        r = r_new;
        hi = hi_new;
        accepted = true;
        break;
      }
      h *= 0.5;
    }
    if (!accepted) fail(ErrorCode::halving_exhausted, "coupled_triple: step halving exhausted");
    log_r = std::log1p(r - 1.0);
    out.bes2.push(t, lo);
    out.r.push(t, r);
    out.bes2d.push(t, hi);
  }
  for (auto* p : {&out.bes2, &out.r, &out.bes2d}) p->refresh_step_stats();

  const double level = std::exp(2.0 / delta);
  if (out.r.back_value() > level) {
    std::size_t i = out.r.size();
    while (i > 0 && out.r.values[i - 1] > level) --i;
    if (i > 0) {
      out.switch_index = i - 1;
      out.switch_time = out.r.times[i - 1];
    }
  }
  return out;
}

std::size_t lower_coupling_violations(const CoupledTriple& triple) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < triple.r.size(); ++i)
    if (triple.bes2.values[i] > triple.r.values[i]) ++count;
  return count;
}

std::size_t upper_coupling_violations(const CoupledTriple& triple, double tolerance_per_step) {
  if (!triple.switch_index) return 0;
  const std::size_t sw = *triple.switch_index;
  const double gap0 = std::max(triple.r.values[sw] - triple.bes2d.values[sw], 0.0);
  std::size_t count = 0;
  for (std::size_t i = sw + 1; i < triple.r.size(); ++i) {
    const double excess = triple.r.values[i] - triple.bes2d.values[i] - gap0;
    if (excess > tolerance_per_step * static_cast<double>(i - sw)) ++count;
  }
  return count;
}

std::optional<double> first_hitting(const TrajectoryGrid& path, double level) {
  require(!path.times.empty(), "first_hitting: empty path");
  const double d0 = path.values[0] - level;
  if (d0 == 0.0) return path.times[0];
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double d = path.values[i] - level;
    if (d == 0.0) return path.times[i];
    if ((d > 0.0) != (d0 > 0.0)) {
      const double prev = path.values[i - 1] - level;
      const double w = prev / (prev - d);
      return path.times[i - 1] + w * (path.times[i] - path.times[i - 1]);
    }
  }
  return std::nullopt;
}

void write_csv(const TrajectoryGrid& path, std::ostream& out) {
  out << "time,value\n";
  char buf[64];
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.times[i], path.values[i]);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// HybridRadialPath

HybridRadialPath::HybridRadialPath(double r0, const IntegratorConfig& cfg, HybridLevels levels)
    : cfg_(&cfg), levels_(levels) {
  cfg.validate();
  require(std::isfinite(r0) && r0 >= 1.0, "HybridRadialPath: r0 must be >= 1");
  require(levels.natural_below < levels.geometric_above, "HybridRadialPath: levels need hysteresis");
  r_ = detail::entrance_value(r0, cfg);
  log_r_ = std::log1p(r_ - 1.0);
  maybe_switch();
}

double HybridRadialPath::value() const { return geometric_ ? std::exp(log_r_) : r_; }

double HybridRadialPath::natural_time() const {
  return geometric_ ? std::expm1(s_ + s_lo_) : anchor_u_ + local_u_;
}

double HybridRadialPath::geometric_time() const {
  return geometric_ ? s_ + s_lo_ : std::log1p(anchor_u_ + local_u_);
}

double HybridRadialPath::scaled_value() const {
  return geometric_ ? x_ : r_ * std::exp(-0.5 * std::log1p(anchor_u_ + local_u_));
}

bool HybridRadialPath::advance(RngStream& noise, double s_end) {
  const IntegratorConfig& cfg = *cfg_;
  if (!geometric_) {
    const double u_end = std::expm1(s_end);
    const double remaining = (u_end - anchor_u_) - local_u_;
    if (!(remaining > 0.0)) return false;
    const auto st = detail::natural_step(r_, log_r_, std::min(cfg.dt_natural, remaining), cfg, noise);
    local_u_ = st.dt >= remaining ? u_end - anchor_u_ : local_u_ + st.dt;
    r_ = st.value;
    log_r_ = std::log1p(r_ - 1.0);
    last_step_ = st.dt;
  } else {
    const double remaining = (s_end - s_) - s_lo_;
    if (!(remaining > 0.0)) return false;
    const double shrink = std::exp(-0.5 * s_);
    double h = std::min(cfg.dt_geometric, remaining);
    if (levels_.natural_below > 1.0) {
      // Resolve the approach to the hand-over level down to natural-time steps.
      const double gap = x_ - levels_.natural_below * shrink;
      h = std::min(h, std::max(cfg.step_scale * gap * gap, cfg.dt_natural * shrink * shrink));
    }
    const auto st = x_ < detail::kLogStepBelow
                        ? detail::log_geometric_step(x_, s_, log_r_, h, std::log(levels_.natural_below), cfg, noise)
                        : detail::geometric_step(x_, s_, log_r_, h, cfg, noise);
    if (st.dt >= remaining) {
      s_ = s_end;
      s_lo_ = 0.0;
    } else {
      // Compensated sum: steps near X = 0 can fall below the resolution of s.
      const double sum = s_ + st.dt;
      s_lo_ += st.dt - (sum - s_);
      s_ = sum + s_lo_;
      s_lo_ -= s_ - sum;
    }
    x_ = st.value;
    log_r_ = std::log(x_) + 0.5 * (s_ + s_lo_);
    last_step_ = 0.0;
  }
  ++steps_;
  maybe_switch();
  return true;
}

void HybridRadialPath::rewind(double dt_back, double new_value) {
  require(!geometric_, "HybridRadialPath::rewind is only valid in natural mode");
  local_u_ -= dt_back;
  r_ = new_value;
  log_r_ = std::log1p(r_ - 1.0);
  maybe_switch();
}

void HybridRadialPath::maybe_switch() {
  if (!geometric_ && r_ >= levels_.geometric_above) {
    s_ = std::log1p(anchor_u_ + local_u_);
    s_lo_ = 0.0;
    x_ = r_ * std::exp(-0.5 * s_);
    geometric_ = true;
    ++switches_;
  } else if (geometric_ && log_r_ < std::log(levels_.natural_below)) {
    to_natural_mode();
  }
}

void HybridRadialPath::to_natural_mode() {
  anchor_u_ = std::expm1(s_ + s_lo_);
  local_u_ = 0.0;
  r_ = std::exp(log_r_);
  geometric_ = false;
  ++switches_;
}

}  // namespace moustache
