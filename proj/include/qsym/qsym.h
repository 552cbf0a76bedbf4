/* qsym: path-integral sampling of two indistinguishable particles. */
#ifndef QSYM_QSYM_H
#define QSYM_QSYM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QSYM_API __declspec(dllexport)
#else
#define QSYM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI maps them onto process exit codes. */
typedef enum qsym_status {
  QSYM_OK = 0,
  QSYM_ERR_INVALID_ARGUMENT = 1,
  QSYM_ERR_CONFIG = 2,
  QSYM_ERR_NUMERICAL = 3,
  QSYM_ERR_SIGN_COLLAPSE = 4,
  QSYM_ERR_NO_OVERLAP = 5,
  QSYM_ERR_IO = 6,
  QSYM_ERR_CONVERGENCE = 7,
  QSYM_ERR_INTERNAL = 99
} qsym_status;

typedef struct qsym_config qsym_config;
typedef struct qsym_result qsym_result;

QSYM_API const char* qsym_version(void);

/* Message of the last failed call on this thread ("" if none). */
QSYM_API const char* qsym_last_error(void);

/* ---- configuration ---- */

QSYM_API qsym_status qsym_config_load(const char* path, qsym_config** out);
QSYM_API qsym_status qsym_config_parse(const char* text, const char* source_name,
                                       qsym_config** out);
/* Config recorded by a run, given its directory or one of its checkpoints. */
QSYM_API qsym_status qsym_config_from_run(const char* path, qsym_config** out);
QSYM_API void qsym_config_free(qsym_config* config);

/* Canonical hash as 16 hex digits plus NUL; `buffer` needs 17 bytes. */
QSYM_API qsym_status qsym_config_hash(const qsym_config* config, char* buffer, size_t size);

/* Canonical text. Writes at most `size` bytes including the NUL and stores the
   full length (without NUL) in `*needed` when non-null. A NULL buffer only
   queries the length. */
QSYM_API qsym_status qsym_config_serialize(const qsym_config* config, char* buffer, size_t size,
                                           size_t* needed);

QSYM_API int qsym_config_beads(const qsym_config* config);
QSYM_API int qsym_config_dim(const qsym_config* config);
QSYM_API double qsym_config_beta(const qsym_config* config);

/* ---- commands ---- */

typedef struct qsym_run_options {
  int seeds;              /* 0: as configured */
  const char* output_dir; /* NULL: as configured */
  const char* restart;    /* checkpoint file or run directory; NULL for a fresh run */
  int64_t halt_at_step;   /* -1: run to completion */
  int threads;            /* 0: QSYM_NUM_THREADS or all cores */
} qsym_run_options;

QSYM_API void qsym_run_options_init(qsym_run_options* options);

/* Simulates and analyzes. Returns QSYM_OK even if a requested symmetry channel
   collapsed; inspect qsym_result_collapsed_count. */
QSYM_API qsym_status qsym_run(const qsym_config* config, const qsym_run_options* options,
                              qsym_result** out);

/* Re-analyzes a run directory. `estimators`, if non-null, supplies a new
   [estimators] section; `output_dir` may be NULL (the run directory). */
QSYM_API qsym_status qsym_analyze(const char* run_dir, const qsym_config* estimators,
                                  const char* output_dir, qsym_result** out);

QSYM_API qsym_status qsym_oracle(const qsym_config* config, const char* output_dir,
                                 qsym_result** out);

QSYM_API qsym_status qsym_bennett(const char* distinguishable_run_dir,
                                  const char* connected_run_dir, const char* output_dir,
                                  qsym_result** out);

QSYM_API int qsym_result_halted(const qsym_result* result);
QSYM_API const char* qsym_result_output_dir(const qsym_result* result);
QSYM_API const char* qsym_result_summary_path(const qsym_result* result);
QSYM_API size_t qsym_result_collapsed_count(const qsym_result* result);
QSYM_API const char* qsym_result_collapsed_channel(const qsym_result* result, size_t index);
QSYM_API void qsym_result_free(qsym_result* result);

/* ---- numerical helpers ---- */

typedef struct qsym_harmonic_reference {
  double ratio; /* Z_O / Z_oo */
  double energy_boson;
  double energy_fermion;
  double energy_distinguishable;
} qsym_harmonic_reference;

/* Two particles in an isotropic well, hbar = 1. num_beads = 0 gives the
   continuum limit, otherwise the P-bead discretization. */
QSYM_API qsym_status qsym_harmonic(double beta, double hbar_omega, int dim, int num_beads,
                                   qsym_harmonic_reference* out);

/* Exchange variable s for positions laid out [particle][bead][dim]. */
QSYM_API qsym_status qsym_exchange_cv(const qsym_config* config, const double* positions,
                                      size_t count, double* s);

/* W = 1 + exp(-beta s) (fermion = 0) or 1 - exp(-beta s) as sign * exp(log_abs). */
QSYM_API qsym_status qsym_symmetry_weight(double s, double beta, int fermion, int* sign,
                                          double* log_abs);

#ifdef __cplusplus
}
#endif

#endif
