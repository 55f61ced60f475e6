#ifndef MOUSTACHE_MOUSTACHE_H
#define MOUSTACHE_MOUSTACHE_H

/*
 * C interface to the moustache simulation library: regeneration cycles of
 * the radial part of planar Brownian motion conditioned to avoid the unit
 * disk, their renewal sequences, and the estimators built on them.
 *
 * Every object is an opaque handle released by its *_destroy function.
 * Functions return MSC_OK or an error status; msc_last_error() then holds a
 * message for the calling thread. Strings returned through char** are owned
 * by the caller and released with msc_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSC_API __declspec(dllexport)
#else
#define MSC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msc_status {
  MSC_OK = 0,
  MSC_INVALID_ARGUMENT = 1,
  MSC_CONFIG = 2,
  MSC_IO = 3,
  MSC_HALVING_EXHAUSTED = 4,
  MSC_NON_FINITE = 5,
  MSC_DRIFT_UNDERFLOW = 6,
  MSC_PHASE_THRASH = 7,
  MSC_EMPTY_SOURCE = 8,
  MSC_TOO_FEW_SAMPLES = 9,
  MSC_INTERNAL = 10
} msc_status;

typedef struct msc_config msc_config;
typedef struct msc_pool msc_pool;
typedef struct msc_renewal msc_renewal;
typedef struct msc_trajectory msc_trajectory;

typedef struct msc_cycle_record {
  double H, T, A, B, U, V;
  int k;
  double err_bound;
} msc_cycle_record;

typedef struct msc_renewal_point {
  double U, lnTp, lnA, lnT, S;
} msc_renewal_point;

MSC_API const char* msc_version(void);
MSC_API const char* msc_last_error(void);
MSC_API void msc_string_free(char* s);

/* Configuration: flat key=value settings with defaults. */
MSC_API msc_status msc_config_create(msc_config** out);
MSC_API void msc_config_destroy(msc_config* cfg);
MSC_API msc_status msc_config_set(msc_config* cfg, const char* key, const char* value);
MSC_API msc_status msc_config_get(const msc_config* cfg, const char* key, char** value);
MSC_API msc_status msc_config_load_file(msc_config* cfg, const char* path);
MSC_API msc_status msc_config_load_text(msc_config* cfg, const char* text);
MSC_API msc_status msc_config_validate(const msc_config* cfg);
/* Newline-separated list of every key. */
MSC_API msc_status msc_config_keys(char** keys);

/* Cycle pools (r, k, n_cycles, integrator settings, seed, workers). */
MSC_API msc_status msc_pool_sample(const msc_config* cfg, msc_pool** out);
MSC_API msc_status msc_pool_load(const char* path, msc_pool** out);
/* A NULL or empty path writes to standard output. */
MSC_API msc_status msc_pool_save(const msc_pool* pool, const char* path);
MSC_API msc_status msc_pool_csv(const msc_pool* pool, char** csv);
MSC_API size_t msc_pool_size(const msc_pool* pool);
MSC_API msc_status msc_pool_record(const msc_pool* pool, size_t index, msc_cycle_record* out);
MSC_API void msc_pool_destroy(msc_pool* pool);

/* Renewal sequences of n_renewal cycles: bootstrap from a pool, or live
 * cycle simulation when pool is NULL. */
MSC_API msc_status msc_renewal_assemble(const msc_config* cfg, const msc_pool* pool, msc_renewal** out);
MSC_API msc_status msc_renewal_save(const msc_renewal* seq, const char* path);
MSC_API size_t msc_renewal_size(const msc_renewal* seq);
MSC_API msc_status msc_renewal_point_at(const msc_renewal* seq, size_t index, msc_renewal_point* out);
MSC_API void msc_renewal_destroy(msc_renewal* seq);

/* Sample paths (path_kind, r0, horizon, dimension). */
MSC_API msc_status msc_trajectory_simulate(const msc_config* cfg, msc_trajectory** out);
MSC_API msc_status msc_trajectory_save(const msc_trajectory* path, const char* file);
MSC_API size_t msc_trajectory_size(const msc_trajectory* path);
MSC_API msc_status msc_trajectory_point(const msc_trajectory* path, size_t index, double* time, double* value);
MSC_API void msc_trajectory_destroy(msc_trajectory* path);

/* Reports, returned as JSON (or CSV for sample dumps and tables). */
MSC_API msc_status msc_tail_report(const msc_config* cfg, const msc_pool* pool, char** json);
MSC_API msc_status msc_rde_report(const msc_config* cfg, const msc_renewal* seq, char** json);
MSC_API msc_status msc_envelope_report(const msc_config* cfg, const msc_renewal* seq, char** json);
MSC_API msc_status msc_limit_report(const msc_config* cfg, char** json);
MSC_API msc_status msc_laws_dump(const msc_config* cfg, char** text);

/* Verification suites "exact", "acceptance" or "all". The callback, if
 * given, receives one formatted line per criterion as it completes. */
typedef void (*msc_verify_callback)(const char* id, int pass, int asserted, const char* line, void* user);
MSC_API msc_status msc_verify(const msc_config* cfg, const char* suite, msc_verify_callback callback, void* user,
                              int* all_passed);

/* Closed forms. */
MSC_API double msc_tail_v(double v);
MSC_API double msc_exit_prob(double a, double r0, double b);
MSC_API double msc_rayleigh_cdf(double x);

#ifdef __cplusplus
}
#endif

#endif
