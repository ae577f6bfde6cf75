/* SPDX-License-Identifier: Apache-2.0 */

#ifndef BDP_BDP_H
#define BDP_BDP_H

#include <stddef.h>
#include <stdint.h>

#if defined(BDP_BUILDING_LIBRARY)
#define BDP_API __attribute__((visibility("default")))
#else
#define BDP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Transient analysis of multidimensional inhomogeneous birth-death
 * processes. Every function returns a status code; on failure the message is
 * available from bdp_last_error() on the calling thread. */

typedef enum bdp_status {
  BDP_OK = 0,
  BDP_ERR_INVALID_ARGUMENT = 1,
  BDP_ERR_CONFIG = 2,
  BDP_ERR_BOUND_VIOLATION = 3,
  BDP_ERR_NOT_APPLICABLE = 4,
  BDP_ERR_NUMERICAL = 5,
  BDP_ERR_TRUNCATION = 6,
  BDP_ERR_IO = 7,
  BDP_ERR_INTERNAL = 8
} bdp_status;

typedef enum bdp_tail_policy {
  /* Fail with BDP_ERR_TRUNCATION once tail mass exceeds the threshold. */
  BDP_TAIL_ERROR = 0,
  /* End the trajectory at the last grid point below the threshold. */
  BDP_TAIL_STOP = 1
} bdp_tail_policy;

/* Coordinate selector for projections: 1..d picks a type, BDP_TOTAL the
 * total count. */
#define BDP_TOTAL 0

typedef struct bdp_model bdp_model;
typedef struct bdp_trajectory bdp_trajectory;

typedef struct bdp_settings {
  double horizon;
  double grid_step;
  double tail_threshold;
  double slack;
  uint64_t seed;
  uint64_t paths;
} bdp_settings;

typedef struct bdp_null_certificate {
  double sigma;
  double alpha_star;
} bdp_null_certificate;

typedef struct bdp_weak_certificate {
  double beta;
  double alpha_low;
} bdp_weak_certificate;

BDP_API const char* bdp_version(void);
BDP_API const char* bdp_status_name(bdp_status status);
/* Message of the last failed call on this thread ("" if none). */
BDP_API const char* bdp_last_error(void);

/* Models */
BDP_API bdp_status bdp_model_load(const char* path, bdp_model** out);
BDP_API bdp_status bdp_model_parse(const char* yaml, const char* source_name,
                                   bdp_model** out);
BDP_API void bdp_model_free(bdp_model* model);
BDP_API bdp_status bdp_model_dimension(const bdp_model* model, size_t* out);
BDP_API bdp_status bdp_model_space_size(const bdp_model* model, size_t* out);
/* index,m_1,...,m_d for every state of the truncated space, in the order
 * used by trajectory columns. */
BDP_API bdp_status bdp_model_write_states_csv(const bdp_model* model,
                                              const char* path);
BDP_API bdp_status bdp_model_get_settings(const bdp_model* model,
                                          bdp_settings* out);
BDP_API bdp_status bdp_model_set_settings(bdp_model* model,
                                          const bdp_settings* settings);

/* Forward equation */
BDP_API bdp_status bdp_solve(const bdp_model* model, bdp_tail_policy policy,
                             bdp_trajectory** out);
BDP_API void bdp_trajectory_free(bdp_trajectory* trajectory);
BDP_API bdp_status bdp_trajectory_size(const bdp_trajectory* trajectory,
                                       size_t* n_points);
/* stopped is set to 1 and stopped_at to the offending grid time when the
 * stop policy ended the run early; otherwise 0 and NaN. */
BDP_API bdp_status bdp_trajectory_stopped(const bdp_trajectory* trajectory,
                                          int* stopped, double* stopped_at);
BDP_API bdp_status bdp_trajectory_point(const bdp_trajectory* trajectory,
                                        size_t index, double* time,
                                        double* tail_mass);
/* Copies min(capacity, K + 1) marginal entries; length receives K + 1. */
BDP_API bdp_status bdp_trajectory_marginal(const bdp_trajectory* trajectory,
                                           size_t index, int coordinate,
                                           double* values, size_t capacity,
                                           size_t* length);
BDP_API bdp_status bdp_trajectory_write_csv(const bdp_trajectory* trajectory,
                                            const char* path);
BDP_API bdp_status bdp_projection_write_csv(const bdp_trajectory* trajectory,
                                            int coordinate, const char* path);

/* Ergodicity certificates. type is 1-based or BDP_TOTAL. A certificate that
 * does not apply returns BDP_ERR_NOT_APPLICABLE with the reason. */
BDP_API bdp_status bdp_null_certificate_get(const bdp_model* model, int type,
                                            bdp_null_certificate* out);
BDP_API bdp_status bdp_weak_certificate_get(const bdp_model* model, int type,
                                            bdp_weak_certificate* out);
/* Text report of all certificates. Copies at most capacity - 1 characters
 * plus a terminator; needed receives the full length including it. */
BDP_API bdp_status bdp_bounds_report(const bdp_model* model, char* buffer,
                                     size_t capacity, size_t* needed);

/* Monte Carlo oracle. threads = 0 uses every core; results do not depend on
 * it. */
BDP_API bdp_status bdp_simulate_write_csv(const bdp_model* model,
                                          unsigned threads, const char* path);

/* Runs the built-in acceptance checks and, when model is not NULL, the
 * checks for that model. Writes one "CHECK <name> PASS|FAIL <detail>" line per
 * check. all_pass receives 1 only if every check passed. */
BDP_API bdp_status bdp_verify(const bdp_model* model, uint64_t seed,
                              uint64_t paths, unsigned threads,
                              const char* report_path, int* all_pass);

/* Primitives */
BDP_API bdp_status bdp_log_norm(const double* column_major, size_t n,
                                double* out);
BDP_API bdp_status bdp_tail_probability_bound(double sigma, double alpha_star,
                                              int k, int n, double t,
                                              double* out);

#ifdef __cplusplus
}
#endif

#endif
