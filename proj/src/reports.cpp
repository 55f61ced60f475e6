#include "reports.hpp"

#include <cmath>
#include <sstream>

#include "error.hpp"
#include "estimators.hpp"
#include "laws.hpp"

namespace moustache {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Columns of equal length, rendered as CSV or as a JSON object of arrays.
std::string render_columns(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols,
                           OutputFormat format) {
  if (format == OutputFormat::json) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < names.size(); ++c) j[names[c]] = cols[c];
    return j.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) out += (c ? "," : "") + names[c];
  out += '\n';
  const std::size_t rows = cols.empty() ? 0 : cols[0].size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + format_double(cols[c][i]);
    out += '\n';
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace

CyclePool pool_from(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.pool.empty()) return load_pool(cfg.pool);
  return sample_cycle_pool(CycleLawParams{cfg.r}, cfg.k, cfg.n_cycles, cfg.integrator, cfg.workers);
}

RenewalSequence renewal_from(const ExperimentConfig& cfg, const CyclePool* pool) {
  cfg.validate();
  if (pool) {
    RngStream rng(cfg.integrator.seed, 0);
    return assemble_renewal(*pool, cfg.n_renewal, rng);
  }
  const auto fresh = sample_cycle_pool(CycleLawParams{cfg.r}, cfg.k, cfg.n_renewal, cfg.integrator, cfg.workers);
  return assemble_in_order(fresh, 0, cfg.n_renewal);
}

TrajectoryGrid trajectory_from(const ExperimentConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.integrator.seed, 0);
  if (cfg.path_kind == "X") return integrate_x(cfg.r0, cfg.horizon, 0.0, cfg.integrator, rng);
  if (cfg.path_kind == "bessel") return integrate_bessel(cfg.dimension, cfg.r0, cfg.horizon, cfg.integrator, rng);
  return integrate_r(cfg.r0, cfg.horizon, cfg.integrator, rng);
}

nlohmann::json tail_report(const ExperimentConfig& cfg, const CyclePool& pool) {
  cfg.validate();
  const auto upper = estimate_t_tail(pool, cfg.t_grid);
  nlohmann::json j = to_json(upper);
  std::vector<double> ratio;
  const double log_r = std::log(pool.params.r);
  for (std::size_t i = 0; i < upper.t_grid.size(); ++i)
    ratio.push_back(upper.t_grid[i] > 1.0 ? upper.p_hat[i] * std::log(upper.t_grid[i]) / log_r : std::nan(""));
  j["ratio"] = ratio;
  j["band"] = {cfg.band_low, cfg.band_high};
  j["r"] = pool.params.r;
  j["k"] = pool.k;
  j["lower"] = to_json(estimate_t_lower_tail(pool, cfg.t_lower));
  return j;
}

nlohmann::json rde_report(const ExperimentConfig& cfg, const RenewalSequence& seq) {
  cfg.validate();
  std::vector<double> grid;
  for (double t : cfg.t_grid)
    if (t > 1.0) grid.push_back(t);
  nlohmann::json j = to_json(rde_diagnostics(seq, grid));
  j["r"] = seq.r;
  j["s_recursion_residual"] = s_recursion_residual(seq);
  return j;
}

nlohmann::json envelope_report(const ExperimentConfig& cfg, const RenewalSequence& seq) {
  cfg.validate();
  LogEnvelope env;
  double K = 0.0;
  if (cfg.envelope == "sqrt") {
    env = sqrt_envelope();
  } else if (cfg.envelope == "power") {
    const double c = cfg.g_coef;
    const double p = cfg.g_power;
    env = power_envelope([c, p](double u) { return c / std::pow(std::max(u, 1.0), p); });
  } else {
    K = cfg.K > 0.0 ? cfg.K : escape_constant(seq.r);
    env = escape_envelope(K);
  }
  const std::size_t last = cfg.last == 0 ? seq.n() : cfg.last;
  const auto side = cfg.side == "above" ? CrossingSide::above : CrossingSide::below;
  nlohmann::json j = to_json(future_min_envelope(seq, env, side, cfg.first, last));
  j["envelope"] = cfg.envelope;
  j["side"] = cfg.side;
  j["first"] = cfg.first;
  j["last"] = last;
  if (cfg.envelope == "power") j["g"] = {{"coef", cfg.g_coef}, {"power", cfg.g_power}};
  if (cfg.envelope == "escape") j["K"] = K;
  return j;
}

nlohmann::json limit_report(const ExperimentConfig& cfg) {
  cfg.validate();
  nlohmann::json j = nlohmann::json::object();
  const auto& ic = cfg.integrator;
  for (const auto& check : split(cfg.checks, ',')) {
    if (check == "rayleigh") {
      j["rayleigh"] = to_json(rayleigh_limit_check(cfg.r0, cfg.t_limit, cfg.n_paths, ic, cfg.workers));
    } else if (check == "ergodic") {
      RngStream rng(ic.seed, 0);
      const auto path = simulate_x_path(cfg.r0, cfg.s_horizon, ic, rng);
      const double median = std::sqrt(2.0 * std::log(2.0));
      j["ergodic"] = {
          {"s_horizon", cfg.s_horizon},
          {"x_squared", ergodic_average(path, [](double x) { return x * x; })},
          {"x_squared_target", 2.0},
          {"below_median", ergodic_average(path, [median](double x) { return x <= median ? 1.0 : 0.0; })},
          {"below_median_target", 0.5}};
    } else if (check == "moments") {
      j["moments"] = to_json(moment_check(cfg.r0, cfg.t_moment, cfg.n_paths, ic, cfg.workers));
      j["moments"]["t"] = cfg.t_moment;
    } else if (check == "exit") {
      nlohmann::json e = to_json(exit_prob_mc(cfg.a, cfg.exit_r0, cfg.b, cfg.n_paths, ic, cfg.workers));
      e["exact"] = exit_prob(cfg.a, cfg.exit_r0, cfg.b);
      j["exit"] = e;
    } else {
      fail(ErrorCode::config, "unknown limit check '" + check + "'");
    }
  }
  return j;
}

std::string laws_dump(const ExperimentConfig& cfg) {
  cfg.validate();
  const CycleLawParams params{cfg.r};
  if (cfg.table) {
    if (cfg.law == "v") {
      const auto v = linspace(1.0, 21.0, 201);
      std::vector<double> dens, tail;
      for (double x : v) {
        dens.push_back(density_v(x));
        tail.push_back(tail_v(x));
      }
      return render_columns({"v", "density_v", "tail_v"}, {v, dens, tail}, cfg.format);
    }
    if (cfg.law == "uv") {
      std::vector<double> us, vs, dens, cdf;
      for (double u : linspace(0.05, 0.95, 19))
        for (double v : linspace(1.0, 11.0, 101)) {
          us.push_back(u);
          vs.push_back(v);
          dens.push_back(density_uv(u, v));
          cdf.push_back(conditional_cdf_v(v, u));
        }
      return render_columns({"u", "v", "density_uv", "conditional_cdf_v"}, {us, vs, dens, cdf}, cfg.format);
    }
    if (cfg.law == "rayleigh") {
      const auto x = linspace(0.0, 5.0, 201);
      std::vector<double> pdf, cdf;
      for (double v : x) {
        pdf.push_back(rayleigh_pdf(v));
        cdf.push_back(rayleigh_cdf(v));
      }
      return render_columns({"x", "pdf", "cdf"}, {x, pdf, cdf}, cfg.format);
    }
    const auto a = linspace(1.0, cfg.r, 201);
    std::vector<double> cdf;
    for (double v : a) cdf.push_back(future_min_cdf(v, cfg.r));
    return render_columns({"a", "future_min_cdf"}, {a, cdf}, cfg.format);
  }

  const std::size_t n = cfg.n_cycles;
  std::vector<double> first(n), second(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(cfg.integrator.seed, i);
    if (cfg.law == "v" || cfg.law == "uv") {
      const auto uv = sample_uv(params, rng);
      first[i] = uv.first;
      second[i] = uv.second;
    } else if (cfg.law == "rayleigh") {
      first[i] = rayleigh_sample(rng);
    } else {
      first[i] = sample_future_min(cfg.r, rng);
    }
  }
  if (cfg.law == "uv") return render_columns({"u", "v"}, {first, second}, cfg.format);
  if (cfg.law == "v") return render_columns({"v"}, {second}, cfg.format);
  if (cfg.law == "rayleigh") return render_columns({"x"}, {first}, cfg.format);
  return render_columns({"m"}, {first}, cfg.format);
}

}  // namespace moustache
