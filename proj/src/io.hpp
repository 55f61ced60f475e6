#ifndef MOUSTACHE_IO_HPP
#define MOUSTACHE_IO_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "estimators.hpp"
#include "regeneration.hpp"
#include "sde.hpp"

namespace moustache {

enum class OutputFormat { csv, json };

/// Every knob of every experiment. Keys of the flat config file are the
/// field names below, and each has a CLI flag of the same name.
struct ExperimentConfig {
  double r = 2.0;
  int k = 30;
  std::size_t n_cycles = 1000;
  std::size_t n_paths = 1000;
  std::size_t n_renewal = 10000;
  IntegratorConfig integrator;
  unsigned workers = 1;
  std::string output;  // empty: standard output
  OutputFormat format = OutputFormat::csv;

  std::string pool;              // input cycle pool CSV
  std::vector<double> t_grid{100.0, 1000.0, 10000.0};
  double t_lower = 0.2;          // lower-tail threshold
  double r0 = 2.0;
  double horizon = 10.0;         // trajectory horizon: natural time, geometric for X
  std::string path_kind = "R";   // R, X or bessel
  double dimension = 2.0;        // Bessel dimension

  std::string law = "v";         // laws: v, uv, rayleigh or future_min
  bool table = false;            // laws: density table instead of samples

  std::string checks = "rayleigh,ergodic,moments,exit";
  double t_limit = 1000.0;       // Rayleigh check time
  double s_horizon = 1000.0;     // ergodic average geometric horizon
  double t_moment = 1.0;         // martingale and second-moment time
  double a = 2.0;                // exit interval (a, b) from exit_r0
  double b = 16.0;
  double exit_r0 = 4.0;

  std::string envelope = "sqrt";  // sqrt, power or escape
  double g_coef = 3.0;            // power envelope g(u) = g_coef / u^g_power
  double g_power = 2.0;
  double K = 0.0;                 // escape envelope constant; 0: r sqrt(2(r+1)/(r-1))
  std::string side = "below";
  std::size_t first = 1;
  std::size_t last = 0;           // 0: whole sequence

  std::string suite = "exact";
  double band_low = 0.7;          // ratio bands for asymptotic tail checks
  double band_high = 1.3;

  /// Sets one field from its textual value; unknown keys and malformed
  /// values raise ErrorCode::config.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  void validate() const;
};

const std::vector<std::string>& config_keys();

/// Flat key=value text; '#' starts a comment.
void load_config_text(ExperimentConfig& cfg, const std::string& text);
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// Cycle pools: one "# r=..;k=..;<fingerprint>" line, then
// H,T,A,B,U,V,k,err_bound rows at full precision.
void write_pool_csv(const CyclePool& pool, std::ostream& out);
CyclePool read_pool_csv(std::istream& in);
void save_pool(const CyclePool& pool, const std::string& path);
CyclePool load_pool(const std::string& path);

void write_renewal_csv(const RenewalSequence& seq, std::ostream& out);

nlohmann::json to_json(const TailEstimate& e);
nlohmann::json to_json(const LowerTailEstimate& e);
nlohmann::json to_json(const KsReport& r);
nlohmann::json to_json(const RayleighCheck& r);
nlohmann::json to_json(const ExitEstimate& e);
nlohmann::json to_json(const RdeReport& r);
nlohmann::json to_json(const MomentCheck& m);
nlohmann::json to_json(const CrossingReport& c);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Writes text to `path`, or to standard output when path is empty.
void emit(const std::string& text, const std::string& path);

}  // namespace moustache

#endif
