// Command-line driver for the moustache library.
//
// Settings are applied in order: built-in defaults, the --config file, the
// MOUSTACHE_SEED environment variable, then command-line flags.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "moustache/moustache.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSuiteFailed = 4;

struct Failure {
  int exit_code;
};

int exit_code_for(msc_status s) {
  switch (s) {
    case MSC_OK:
      return 0;
    case MSC_CONFIG:
    case MSC_INVALID_ARGUMENT:
      return kExitConfig;
    case MSC_IO:
      return kExitIo;
    default:
      return kExitRuntime;
  }
}

void check(msc_status s) {
  if (s == MSC_OK) return;
  std::fprintf(stderr, "moustache: %s\n", msc_last_error());
  throw Failure{exit_code_for(s)};
}

struct ConfigDeleter {
  void operator()(msc_config* c) const { msc_config_destroy(c); }
};
struct PoolDeleter {
  void operator()(msc_pool* p) const { msc_pool_destroy(p); }
};
struct RenewalDeleter {
  void operator()(msc_renewal* r) const { msc_renewal_destroy(r); }
};
struct TrajectoryDeleter {
  void operator()(msc_trajectory* t) const { msc_trajectory_destroy(t); }
};
using ConfigPtr = std::unique_ptr<msc_config, ConfigDeleter>;
using PoolPtr = std::unique_ptr<msc_pool, PoolDeleter>;
using RenewalPtr = std::unique_ptr<msc_renewal, RenewalDeleter>;
using TrajectoryPtr = std::unique_ptr<msc_trajectory, TrajectoryDeleter>;

std::string take(char* s) {
  std::string out(s ? s : "");
  msc_string_free(s);
  return out;
}

std::string get(const msc_config* cfg, const char* key) {
  char* v = nullptr;
  check(msc_config_get(cfg, key, &v));
  return take(v);
}

void write_text(const std::string& text, const std::string& path) {
  FILE* f = path.empty() ? stdout : std::fopen(path.c_str(), "wb");
  if (!f) {
    std::fprintf(stderr, "moustache: cannot open '%s' for writing\n", path.c_str());
    throw Failure{kExitIo};
  }
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  const bool closed = path.empty() ? std::fflush(f) == 0 : std::fclose(f) == 0;
  if (!ok || !closed) {
    std::fprintf(stderr, "moustache: write failed\n");
    throw Failure{kExitIo};
  }
}

PoolPtr pool_for(const msc_config* cfg) {
  msc_pool* p = nullptr;
  const std::string path = get(cfg, "pool");
  check(path.empty() ? msc_pool_sample(cfg, &p) : msc_pool_load(path.c_str(), &p));
  return PoolPtr(p);
}

RenewalPtr renewal_for(const msc_config* cfg) {
  PoolPtr pool;
  if (!get(cfg, "pool").empty()) pool = pool_for(cfg);
  msc_renewal* r = nullptr;
  check(msc_renewal_assemble(cfg, pool.get(), &r));
  return RenewalPtr(r);
}

void on_criterion(const char*, int, int, const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int run_subcommand(const std::string& name, const msc_config* cfg) {
  const std::string output = get(cfg, "output");
  const bool json = get(cfg, "format") == "json";
  if (name == "sample-cycles") {
    auto pool = pool_for(cfg);
    check(msc_pool_save(pool.get(), output.c_str()));
  } else if (name == "renewal") {
    auto seq = renewal_for(cfg);
    if (json) {
      char* report = nullptr;
      check(msc_rde_report(cfg, seq.get(), &report));
      write_text(take(report), output);
    } else {
      check(msc_renewal_save(seq.get(), output.c_str()));
    }
  } else if (name == "tail-t") {
    auto pool = pool_for(cfg);
    char* report = nullptr;
    check(msc_tail_report(cfg, pool.get(), &report));
    write_text(take(report), output);
  } else if (name == "laws") {
    char* text = nullptr;
    check(msc_laws_dump(cfg, &text));
    write_text(take(text), output);
  } else if (name == "limit-checks") {
    char* report = nullptr;
    check(msc_limit_report(cfg, &report));
    write_text(take(report), output);
  } else if (name == "envelopes") {
    auto seq = renewal_for(cfg);
    char* report = nullptr;
    check(msc_envelope_report(cfg, seq.get(), &report));
    write_text(take(report), output);
  } else if (name == "trajectory") {
    msc_trajectory* t = nullptr;
    check(msc_trajectory_simulate(cfg, &t));
    TrajectoryPtr path(t);
    check(msc_trajectory_save(path.get(), output.c_str()));
  } else if (name == "verify") {
    int passed = 0;
    check(msc_verify(cfg, get(cfg, "suite").c_str(), on_criterion, nullptr, &passed));
    std::printf("%s\n", passed ? "suite passed" : "suite FAILED");
    return passed ? 0 : kExitSuiteFailed;
  }
  return 0;
}

std::vector<std::string> config_keys() {
  char* keys = nullptr;
  check(msc_config_keys(&keys));
  std::vector<std::string> out;
  std::stringstream ss(take(keys));
  std::string k;
  while (std::getline(ss, k))
    if (!k.empty()) out.push_back(k);
  return out;
}

// Which count the generic --n flag sets for each subcommand.
const std::map<std::string, std::string> kCountKey = {
    {"sample-cycles", "n_cycles"}, {"tail-t", "n_cycles"},   {"laws", "n_cycles"},
    {"renewal", "n_renewal"},      {"envelopes", "n_renewal"}, {"limit-checks", "n_paths"},
};

int run(int argc, char** argv) {
  CLI::App app{"Regeneration-cycle simulation of the conditioned planar Brownian radius"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "flat key=value configuration file");

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& key : config_keys()) {
    if (key == "table") continue;
    std::string names = "--" + key;
    std::string dashed = key;
    for (auto& ch : dashed)
      if (ch == '_') ch = '-';
    if (dashed != key) names += ",--" + dashed;
    options[key] = app.add_option(names, values[key], "config key '" + key + "'");
  }
  bool table = false;
  auto* table_flag = app.add_flag("--table", table, "laws: density table instead of samples");
  std::string count;
  auto* count_opt = app.add_option("--n", count, "sample count of the subcommand");

  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"sample-cycles", "simulate a cycle pool and write it as CSV"},
      {"renewal", "assemble a renewal sequence (CSV, or diagnostics with --format json)"},
      {"tail-t", "tail estimates of the cycle time T as JSON"},
      {"laws", "closed-form law samples or density tables"},
      {"limit-checks", "Rayleigh, ergodic, moment and exit-probability checks"},
      {"envelopes", "future-minimum envelope crossings"},
      {"verify", "run a verification suite (exit 4 on failure)"},
      {"trajectory", "one sample path as CSV"},
  };
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  msc_config* raw = nullptr;
  check(msc_config_create(&raw));
  ConfigPtr cfg(raw);
  if (!config_file.empty()) check(msc_config_load_file(cfg.get(), config_file.c_str()));
  if (const char* seed = std::getenv("MOUSTACHE_SEED")) check(msc_config_set(cfg.get(), "seed", seed));
  for (const auto& [key, opt] : options)
    if (opt->count() > 0) check(msc_config_set(cfg.get(), key.c_str(), values[key].c_str()));
  if (table_flag->count() > 0) check(msc_config_set(cfg.get(), "table", table ? "true" : "false"));
  if (count_opt->count() > 0) {
    const auto it = kCountKey.find(sub);
    if (it == kCountKey.end()) {
      std::fprintf(stderr, "moustache: --n is not used by '%s'\n", sub.c_str());
      return kExitConfig;
    }
    check(msc_config_set(cfg.get(), it->second.c_str(), count.c_str()));
  }
  check(msc_config_validate(cfg.get()));
  return run_subcommand(sub, cfg.get());
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    return f.exit_code;
  }
}
