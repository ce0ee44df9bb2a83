/* C interface to the nhpp_sched library.
 *
 * Every function returns an nhps_status. On failure the message is available
 * from nhps_last_error() on the same thread until the next call. Permutations
 * cross the boundary as one-based task indices in processing order; a NULL
 * permutation means the identity. Functions that produce text use the
 * (buf, capacity, needed) convention: *needed receives the size including the
 * terminating NUL, and NHPS_BUFFER_TOO_SMALL is returned when it exceeds
 * capacity (buf may be NULL in that case). */
#ifndef NHPP_SCHED_H
#define NHPP_SCHED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NHPS_API __declspec(dllexport)
#else
#define NHPS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nhps_status {
  NHPS_OK = 0,
  NHPS_INVALID_ARGUMENT = 1,
  NHPS_DOMAIN = 2,
  NHPS_UNREACHABLE = 3,
  NHPS_STEP_TOO_COARSE = 4,
  NHPS_MISSING_CLOSURE = 5,
  NHPS_DIVERGENCE = 6,
  NHPS_NON_CONVERGENCE = 7,
  NHPS_GUARD_EXCEEDED = 8,
  NHPS_CONFIG = 9,
  NHPS_IO = 10,
  NHPS_BUFFER_TOO_SMALL = 100,
  NHPS_INTERNAL = 101
} nhps_status;

typedef enum nhps_order { NHPS_SPT = 0, NHPS_LPT = 1 } nhps_order;
typedef enum nhps_sampling { NHPS_INVERSION = 0, NHPS_THINNING = 1 } nhps_sampling;
typedef enum nhps_variant { NHPS_PREEMPT_REPEAT = 0, NHPS_SINGLE_FAILURE = 1 } nhps_variant;
typedef enum nhps_format { NHPS_CSV = 0, NHPS_JSON = 1 } nhps_format;

typedef struct nhps_model nhps_model;
typedef struct nhps_report nhps_report;

NHPS_API const char* nhps_version(void);
NHPS_API const char* nhps_status_name(nhps_status status);
/* Message of the last failed call on this thread; "" when none. */
NHPS_API const char* nhps_last_error(void);

/* Rate models. The descriptor is JSON {"kind":..., "params":{...}} or the
 * short form "kind:p1,p2,...". */
NHPS_API nhps_status nhps_model_parse(const char* descriptor, nhps_model** out);
NHPS_API void nhps_model_free(nhps_model* model);
NHPS_API nhps_status nhps_model_rate(const nhps_model* model, double t, double* out);
NHPS_API nhps_status nhps_model_cumulative(const nhps_model* model, double t1, double t2, double* out);
NHPS_API nhps_status nhps_model_inverse(const nhps_model* model, double x, double* out);
/* Canonical JSON descriptor. */
NHPS_API nhps_status nhps_model_describe(const nhps_model* model, char* buf, size_t capacity, size_t* needed);
/* Human-readable label. */
NHPS_API nhps_status nhps_model_label(const nhps_model* model, char* buf, size_t capacity, size_t* needed);

/* Writes n one-based indices into perm_out. */
NHPS_API nhps_status nhps_sort_order(const double* tasks, size_t n, nhps_order order, size_t* perm_out);

typedef struct nhps_estimate_options {
  uint64_t replications;
  uint64_t seed;
  unsigned threads; /* 0: NHPP_SCHED_THREADS or hardware concurrency */
  nhps_sampling sampling;
  nhps_variant variant;
  uint64_t restart_cap;
} nhps_estimate_options;

typedef struct nhps_estimate {
  double mean;
  double std_error;
  uint64_t replications;
  double mean_restarts;
  uint64_t max_restarts;
  double max_makespan;
} nhps_estimate;

NHPS_API void nhps_estimate_options_init(nhps_estimate_options* options);

/* Monte Carlo estimate of the expected makespan. */
NHPS_API nhps_status nhps_estimate_makespan(const nhps_model* model, const double* tasks, size_t n,
                                            const size_t* perm, const nhps_estimate_options* options,
                                            nhps_estimate* out);

/* Numerical solution of the renewal equations, refined until successive
 * step halvings agree within tol. t_close <= 0 selects the default closure
 * time. step_out may be NULL. */
NHPS_API nhps_status nhps_exact_makespan(const nhps_model* model, const double* tasks, size_t n, const size_t* perm,
                                         double tol, double t_close, double* value_out, double* step_out);

/* Expected makespan when at most one failure occurs. */
NHPS_API nhps_status nhps_single_failure_makespan(const nhps_model* model, const double* tasks, size_t n,
                                                  const size_t* perm, double* out);

/* R(SPT) - R(perm) under the single-failure model, from the closed-form
 * weighted CDF sums. */
NHPS_API nhps_status nhps_single_failure_difference(const nhps_model* model, const double* tasks, size_t n,
                                                    const size_t* perm, double* out);

/* JSON array of the sufficient-condition checks that apply to the batch. */
NHPS_API nhps_status nhps_thresholds_json(const nhps_model* model, const double* tasks, size_t n, char* buf,
                                          size_t capacity, size_t* needed);

/* Runs an experiment described by a JSON config. out_dir, when not NULL,
 * replaces the configured output directory. Nothing is written to disk until
 * nhps_report_write. */
NHPS_API nhps_status nhps_experiment_run(const char* config_json, const char* out_dir, nhps_report** out);
NHPS_API void nhps_report_free(nhps_report* report);
NHPS_API nhps_status nhps_report_text(const nhps_report* report, nhps_format format, char* buf, size_t capacity,
                                      size_t* needed);
/* Writes the configured formats; *written receives the number of files. */
NHPS_API nhps_status nhps_report_write(const nhps_report* report, size_t* written);

/* Closed-form oracle suite. Text holds one "PASS|FAIL name: detail" line per
 * case; *failures receives the number of failed cases. */
NHPS_API nhps_status nhps_selftest(char* buf, size_t capacity, size_t* needed, size_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* NHPP_SCHED_H */
