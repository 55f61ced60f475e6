#include "moustache/moustache.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "error.hpp"
#include "io.hpp"
#include "laws.hpp"
#include "reports.hpp"
#include "verify.hpp"

struct msc_config {
  moustache::ExperimentConfig cfg;
};

struct msc_pool {
  moustache::CyclePool pool;
};

struct msc_renewal {
  moustache::RenewalSequence seq;
};

struct msc_trajectory {
  moustache::TrajectoryGrid path;
};

namespace {

thread_local std::string last_error;

msc_status set_error(msc_status code, const char* what) {
  last_error = what;
  return code;
}

// Runs body and maps any exception onto a status code.
template <class Body>
msc_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return MSC_OK;
  } catch (const moustache::Error& e) {
    return set_error(static_cast<msc_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(MSC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MSC_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) moustache::fail(moustache::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* msc_version(void) { return "1.0.0"; }

const char* msc_last_error(void) { return last_error.c_str(); }

void msc_string_free(char* s) { std::free(s); }

msc_status msc_config_create(msc_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new msc_config();
  });
}

void msc_config_destroy(msc_config* cfg) { delete cfg; }

msc_status msc_config_set(msc_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

msc_status msc_config_get(const msc_config* cfg, const char* key, char** value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    *value = duplicate(cfg->cfg.get(key));
  });
}

msc_status msc_config_load_file(msc_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "cfg");
    need(path, "path");
    moustache::load_config_file(cfg->cfg, path);
  });
}

msc_status msc_config_load_text(msc_config* cfg, const char* text) {
  return guarded([&] {
    need(cfg, "cfg");
    need(text, "text");
    moustache::load_config_text(cfg->cfg, text);
  });
}

msc_status msc_config_validate(const msc_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.validate();
  });
}

msc_status msc_config_keys(char** keys) {
  return guarded([&] {
    need(keys, "keys");
    std::string out;
    for (const auto& k : moustache::config_keys()) out += k + "\n";
    *keys = duplicate(out);
  });
}

msc_status msc_pool_sample(const msc_config* cfg, msc_pool** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    auto c = cfg->cfg;
    c.pool.clear();
    auto* p = new msc_pool{moustache::pool_from(c)};
    *out = p;
  });
}

msc_status msc_pool_load(const char* path, msc_pool** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new msc_pool{moustache::load_pool(path)};
  });
}

msc_status msc_pool_save(const msc_pool* pool, const char* path) {
  return guarded([&] {
    need(pool, "pool");
    moustache::save_pool(pool->pool, path ? path : "");
  });
}

msc_status msc_pool_csv(const msc_pool* pool, char** csv) {
  return guarded([&] {
    need(pool, "pool");
    need(csv, "csv");
    std::ostringstream out;
    moustache::write_pool_csv(pool->pool, out);
    *csv = duplicate(out.str());
  });
}

size_t msc_pool_size(const msc_pool* pool) { return pool ? pool->pool.size() : 0; }

msc_status msc_pool_record(const msc_pool* pool, size_t index, msc_cycle_record* out) {
  return guarded([&] {
    need(pool, "pool");
    need(out, "out");
    moustache::require(index < pool->pool.size(), "pool record index out of range");
    const auto& c = pool->pool.records[index];
    *out = msc_cycle_record{c.H, c.T, c.A, c.B, c.U, c.V, c.k, c.err_bound};
  });
}

void msc_pool_destroy(msc_pool* pool) { delete pool; }

msc_status msc_renewal_assemble(const msc_config* cfg, const msc_pool* pool, msc_renewal** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new msc_renewal{moustache::renewal_from(cfg->cfg, pool ? &pool->pool : nullptr)};
  });
}

msc_status msc_renewal_save(const msc_renewal* seq, const char* path) {
  return guarded([&] {
    need(seq, "seq");
    std::ostringstream out;
    moustache::write_renewal_csv(seq->seq, out);
    moustache::emit(out.str(), path ? path : "");
  });
}

size_t msc_renewal_size(const msc_renewal* seq) { return seq ? seq->seq.n() : 0; }

msc_status msc_renewal_point_at(const msc_renewal* seq, size_t index, msc_renewal_point* out) {
  return guarded([&] {
    need(seq, "seq");
    need(out, "out");
    const auto& s = seq->seq;
    moustache::require(index < s.n(), "renewal index out of range");
    *out = msc_renewal_point{s.U[index], s.lnTp[index], s.lnA[index], s.lnT[index], s.S[index]};
  });
}

void msc_renewal_destroy(msc_renewal* seq) { delete seq; }

msc_status msc_trajectory_simulate(const msc_config* cfg, msc_trajectory** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new msc_trajectory{moustache::trajectory_from(cfg->cfg)};
  });
}

msc_status msc_trajectory_save(const msc_trajectory* path, const char* file) {
  return guarded([&] {
    need(path, "path");
    std::ostringstream out;
    moustache::write_csv(path->path, out);
    moustache::emit(out.str(), file ? file : "");
  });
}

size_t msc_trajectory_size(const msc_trajectory* path) { return path ? path->path.size() : 0; }

msc_status msc_trajectory_point(const msc_trajectory* path, size_t index, double* time, double* value) {
  return guarded([&] {
    need(path, "path");
    need(time, "time");
    need(value, "value");
    moustache::require(index < path->path.size(), "trajectory index out of range");
    *time = path->path.times[index];
    *value = path->path.values[index];
  });
}

void msc_trajectory_destroy(msc_trajectory* path) { delete path; }

msc_status msc_tail_report(const msc_config* cfg, const msc_pool* pool, char** json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(pool, "pool");
    need(json, "json");
    *json = duplicate(moustache::tail_report(cfg->cfg, pool->pool).dump(2) + "\n");
  });
}

msc_status msc_rde_report(const msc_config* cfg, const msc_renewal* seq, char** json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(seq, "seq");
    need(json, "json");
    *json = duplicate(moustache::rde_report(cfg->cfg, seq->seq).dump(2) + "\n");
  });
}

msc_status msc_envelope_report(const msc_config* cfg, const msc_renewal* seq, char** json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(seq, "seq");
    need(json, "json");
    *json = duplicate(moustache::envelope_report(cfg->cfg, seq->seq).dump(2) + "\n");
  });
}

msc_status msc_limit_report(const msc_config* cfg, char** json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(json, "json");
    *json = duplicate(moustache::limit_report(cfg->cfg).dump(2) + "\n");
  });
}

msc_status msc_laws_dump(const msc_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "cfg");
    need(text, "text");
    *text = duplicate(moustache::laws_dump(cfg->cfg));
  });
}

msc_status msc_verify(const msc_config* cfg, const char* suite, msc_verify_callback callback, void* user,
                      int* all_passed) {
  return guarded([&] {
    need(cfg, "cfg");
    need(suite, "suite");
    moustache::CriterionCallback cb;
    if (callback) {
      cb = [callback, user](const moustache::CriterionResult& r) {
        const std::string line = moustache::format_result(r);
        callback(r.id.c_str(), r.pass ? 1 : 0, r.asserted ? 1 : 0, line.c_str(), user);
      };
    }
    const auto results = moustache::run_suite(suite, cfg->cfg, cb);
    if (all_passed) *all_passed = moustache::suite_passed(results) ? 1 : 0;
  });
}

double msc_tail_v(double v) {
  try {
    return moustache::tail_v(v);
  } catch (const std::exception& e) {
    set_error(MSC_INVALID_ARGUMENT, e.what());
    return std::nan("");
  }
}

double msc_exit_prob(double a, double r0, double b) {
  try {
    return moustache::exit_prob(a, r0, b);
  } catch (const std::exception& e) {
    set_error(MSC_INVALID_ARGUMENT, e.what());
    return std::nan("");
  }
}

double msc_rayleigh_cdf(double x) { return moustache::rayleigh_cdf(x); }

}  // extern "C"
