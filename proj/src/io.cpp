#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "error.hpp"

namespace moustache {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::config, "config: bad value '" + value + "' for key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return {};
  const auto hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, value);
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    // Accept integral values written in floating form, e.g. 1e5.
    const double d = parse_double(key, value);
    if (!(d >= 0.0 && d < 1.8e19 && d == std::floor(d))) bad_value(key, value);
    return static_cast<std::uint64_t>(d);
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field real_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

template <class T>
Field count_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<T>(parse_unsigned(k, v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field text_field(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string&, const std::string& v) { c.*member = trim(v); },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

template <class T>
Field integrator_real(T IntegratorConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.integrator.*member = parse_double(k, v);
          },
          [member](const ExperimentConfig& c) { return format_double(c.integrator.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["r"] = real_field(&ExperimentConfig::r);
    t["k"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                const auto n = parse_unsigned(k, v);
                if (n > 100000) bad_value(k, v);
                c.k = static_cast<int>(n);
              },
              [](const ExperimentConfig& c) { return std::to_string(c.k); }};
    t["n_cycles"] = count_field(&ExperimentConfig::n_cycles);
    t["n_paths"] = count_field(&ExperimentConfig::n_paths);
    t["n_renewal"] = count_field(&ExperimentConfig::n_renewal);
    t["dt_natural"] = integrator_real(&IntegratorConfig::dt_natural);
    t["dt_geometric"] = integrator_real(&IntegratorConfig::dt_geometric);
    t["boundary_guard"] = integrator_real(&IntegratorConfig::boundary_guard);
    t["step_scale"] = integrator_real(&IntegratorConfig::step_scale);
    t["max_halvings"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           const auto n = parse_unsigned(k, v);
                           if (n > 1000) bad_value(k, v);
                           c.integrator.max_halvings = static_cast<int>(n);
                         },
                         [](const ExperimentConfig& c) { return std::to_string(c.integrator.max_halvings); }};
    t["seed"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.integrator.seed = parse_unsigned(k, v);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.integrator.seed); }};
    t["workers"] = count_field(&ExperimentConfig::workers);
    t["output"] = text_field(&ExperimentConfig::output);
    t["format"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                     const auto s = trim(v);
                     if (s == "csv") c.format = OutputFormat::csv;
                     else if (s == "json") c.format = OutputFormat::json;
                     else bad_value(k, v);
                   },
                   [](const ExperimentConfig& c) { return std::string(c.format == OutputFormat::csv ? "csv" : "json"); }};
    t["pool"] = text_field(&ExperimentConfig::pool);
    t["t"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.t_grid = parse_list(k, v); },
              [](const ExperimentConfig& c) { return join(c.t_grid); }};
    t["t_lower"] = real_field(&ExperimentConfig::t_lower);
    t["r0"] = real_field(&ExperimentConfig::r0);
    t["horizon"] = real_field(&ExperimentConfig::horizon);
    t["law"] = text_field(&ExperimentConfig::law);
    t["table"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    const auto s = trim(v);
                    if (s == "1" || s == "true") c.table = true;
                    else if (s == "0" || s == "false") c.table = false;
                    else bad_value(k, v);
                  },
                  [](const ExperimentConfig& c) { return std::string(c.table ? "true" : "false"); }};
    t["checks"] = text_field(&ExperimentConfig::checks);
    t["t_limit"] = real_field(&ExperimentConfig::t_limit);
    t["s_horizon"] = real_field(&ExperimentConfig::s_horizon);
    t["t_moment"] = real_field(&ExperimentConfig::t_moment);
    t["exit_r0"] = real_field(&ExperimentConfig::exit_r0);
    t["a"] = real_field(&ExperimentConfig::a);
    t["b"] = real_field(&ExperimentConfig::b);
    t["path_kind"] = text_field(&ExperimentConfig::path_kind);
    t["dimension"] = real_field(&ExperimentConfig::dimension);
    t["envelope"] = text_field(&ExperimentConfig::envelope);
    t["g_coef"] = real_field(&ExperimentConfig::g_coef);
    t["g_power"] = real_field(&ExperimentConfig::g_power);
    t["K"] = real_field(&ExperimentConfig::K);
    t["side"] = text_field(&ExperimentConfig::side);
    t["first"] = count_field(&ExperimentConfig::first);
    t["last"] = count_field(&ExperimentConfig::last);
    t["suite"] = text_field(&ExperimentConfig::suite);
    t["band_low"] = real_field(&ExperimentConfig::band_low);
    t["band_high"] = real_field(&ExperimentConfig::band_high);
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  const auto it = fields().find(key);
  if (it == fields().end()) fail(ErrorCode::config, "config: unknown key '" + key + "'");
  return it->second;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { field(trim(key)).set(*this, trim(key), value); }

std::string ExperimentConfig::get(const std::string& key) const { return field(trim(key)).get(*this); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return keys;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::config, std::string("config: ") + what);
  };
  check(std::isfinite(r) && r > 1.0, "r must be > 1");
  check(k >= 2, "k must be >= 2");
  check(workers >= 1, "workers must be >= 1");
  check(n_cycles >= 1 && n_paths >= 1 && n_renewal >= 1, "counts must be >= 1");
  check(!t_grid.empty(), "t must list at least one time");
  check(band_low < band_high, "band_low must be below band_high");
  check(side == "below" || side == "above", "side must be 'below' or 'above'");
  check(envelope == "sqrt" || envelope == "power" || envelope == "escape", "envelope must be sqrt, power or escape");
  check(law == "v" || law == "uv" || law == "rayleigh" || law == "future_min",
        "law must be v, uv, rayleigh or future_min");
  check(path_kind == "R" || path_kind == "X" || path_kind == "bessel", "path_kind must be R, X or bessel");
  try {
    integrator.validate();
  } catch (const Error& e) {
    fail(ErrorCode::config, std::string("config: ") + e.what());
  }
}

void load_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::config, "config line " + std::to_string(number) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  load_config_text(cfg, ss.str());
}

void write_pool_csv(const CyclePool& pool, std::ostream& out) {
  out << "# r=" << format_double(pool.params.r) << ";k=" << pool.k << ";" << pool.cfg_fingerprint << "\n";
  out << "H,T,A,B,U,V,k,err_bound\n";
  for (const auto& c : pool.records) {
    out << format_double(c.H) << ',' << format_double(c.T) << ',' << format_double(c.A) << ','
        << format_double(c.B) << ',' << format_double(c.U) << ',' << format_double(c.V) << ',' << c.k << ','
        << format_double(c.err_bound) << '\n';
  }
}

CyclePool read_pool_csv(std::istream& in) {
  CyclePool pool;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# r=", 0) != 0)
    fail(ErrorCode::io, "pool CSV: missing '# r=...' preamble");
  {
    std::stringstream meta(line.substr(2));
    std::string part;
    std::string rest;
    while (std::getline(meta, part, ';')) {
      if (part.rfind("r=", 0) == 0) pool.params.r = parse_double("r", part.substr(2));
      else if (part.rfind("k=", 0) == 0) pool.k = static_cast<int>(parse_unsigned("k", part.substr(2)));
      else rest += (rest.empty() ? "" : ";") + part;
    }
    pool.cfg_fingerprint = rest;
  }
  if (!std::getline(in, line) || trim(line) != "H,T,A,B,U,V,k,err_bound")
    fail(ErrorCode::io, "pool CSV: unexpected header");
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) fail(ErrorCode::io, "pool CSV line " + std::to_string(row) + ": expected 8 columns");
    try {
      CycleRecord c;
      c.H = parse_double("H", cells[0]);
      c.T = parse_double("T", cells[1]);
      c.A = parse_double("A", cells[2]);
      c.B = parse_double("B", cells[3]);
      c.U = parse_double("U", cells[4]);
      c.V = parse_double("V", cells[5]);
      c.k = static_cast<int>(parse_unsigned("k", cells[6]));
      c.err_bound = parse_double("err_bound", cells[7]);
      pool.records.push_back(c);
    } catch (const Error& e) {
      fail(ErrorCode::io, "pool CSV line " + std::to_string(row) + ": " + e.what());
    }
  }
  try {
    pool.check_invariants();
  } catch (const Error& e) {
    fail(ErrorCode::io, std::string("pool CSV: ") + e.what());
  }
  return pool;
}

void save_pool(const CyclePool& pool, const std::string& path) {
  std::ostringstream out;
  write_pool_csv(pool, out);
  emit(out.str(), path);
}

CyclePool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open pool file '" + path + "'");
  return read_pool_csv(in);
}

void write_renewal_csv(const RenewalSequence& seq, std::ostream& out) {
  out << "i,U,lnTp,lnA,lnT,S\n";
  for (std::size_t i = 0; i < seq.n(); ++i) {
    out << (i + 1) << ',' << format_double(seq.U[i]) << ',' << format_double(seq.lnTp[i]) << ','
        << format_double(seq.lnA[i]) << ',' << format_double(seq.lnT[i]) << ',' << format_double(seq.S[i]) << '\n';
  }
}

nlohmann::json to_json(const TailEstimate& e) {
  return {{"t_grid", e.t_grid}, {"p_hat", e.p_hat}, {"ci_low", e.ci_low},
          {"ci_high", e.ci_high}, {"trunc_bias", e.trunc_bias}, {"n", e.n}};
}

nlohmann::json to_json(const LowerTailEstimate& e) {
  return {{"t", e.t}, {"p_hat", e.p_hat}, {"ci_low", e.ci.low}, {"ci_high", e.ci.high}, {"n", e.n}};
}

nlohmann::json to_json(const KsReport& r) {
  return {{"d_n", r.d_n}, {"n", r.n}, {"threshold", r.threshold}, {"pass", r.pass}};
}

nlohmann::json to_json(const RayleighCheck& r) {
  nlohmann::json j = to_json(r.ks);
  j["t"] = r.t;
  j["r0"] = r.r0;
  return j;
}

nlohmann::json to_json(const ExitEstimate& e) {
  return {{"p_hat", e.estimate}, {"ci_low", e.ci.low}, {"ci_high", e.ci.high}, {"n", e.n}};
}

nlohmann::json to_json(const RdeReport& r) {
  return {{"a_hat", r.a_hat},         {"a_se", r.a_se},         {"t_grid", r.t_grid}, {"b_hat", r.b_hat},
          {"beta0_hat", r.beta0_hat}, {"beta0_index", r.beta0_index}, {"n", r.n}};
}

nlohmann::json to_json(const MomentCheck& m) {
  return {{"inverse_log", {{"mean", m.inverse_log.mean}, {"se", m.inverse_log.se}, {"stated", m.inverse_log_stated}}},
          {"second_moment",
           {{"mean", m.second_moment.mean}, {"se", m.second_moment.se}, {"stated", m.second_moment_stated}}},
          {"n", m.inverse_log.n}};
}

nlohmann::json to_json(const CrossingReport& c) {
  return {{"count", c.count}, {"checked", c.checked}, {"indices", c.indices}, {"margins", c.margins}};
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) fail(ErrorCode::io, "cannot write to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

}  // namespace moustache
