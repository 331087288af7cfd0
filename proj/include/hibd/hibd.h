/*
 * Copyright 2026 The hibd Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef HIBD_HIBD_H_
#define HIBD_HIBD_H_

/*
 * C interface to the hibd library.
 *
 * Every function returns an hibd_status. On failure the message for the
 * calling thread is available from hibd_last_error() until the next failing
 * call on that thread. Objects are opaque and owned by the caller once
 * returned through an out-pointer; release them with the matching *_free.
 * Passing NULL to a *_free function is a no-op.
 *
 * Signals are stored flat as ((user * blocks) + block) * block_len + index.
 * Matrices are column-major.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HIBD_API __declspec(dllexport)
#else
#define HIBD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define HIBD_VERSION_STRING "0.1.0"

typedef enum hibd_status {
  HIBD_OK = 0,
  HIBD_ERR_INVALID_ARGUMENT = 1,
  HIBD_ERR_SHAPE = 2,
  HIBD_ERR_NUMERIC = 3,
  HIBD_ERR_GUARD = 4,
  HIBD_ERR_IO = 5,
  HIBD_ERR_INTERNAL = 6
} hibd_status;

typedef enum hibd_u_kind { HIBD_U_GAUSSIAN = 0, HIBD_U_RADEMACHER = 1 } hibd_u_kind;
typedef enum hibd_a_kind { HIBD_A_IDENTITY = 0, HIBD_A_GAUSSIAN = 1 } hibd_a_kind;
typedef enum hibd_lifting { HIBD_LIFT_SHIFT_SUM = 0, HIBD_LIFT_CONVOLUTION = 1 } hibd_lifting;

typedef struct hibd_dictionary hibd_dictionary;
typedef struct hibd_signal hibd_signal;
typedef struct hibd_result hibd_result;
typedef struct hibd_phase_table hibd_phase_table;

HIBD_API const char* hibd_version(void);
HIBD_API const char* hibd_last_error(void);
HIBD_API const char* hibd_status_name(hibd_status status);
HIBD_API void hibd_string_free(char* s);

/* ---- seeds ---------------------------------------------------------- */

HIBD_API uint64_t hibd_derive_seed(uint64_t base, const uint64_t* keys, size_t count);
HIBD_API uint64_t hibd_trial_seed(uint64_t base, int n, int mu, int s, int sigma, int t);

/* ---- dictionaries ----------------------------------------------------- */

typedef struct hibd_ensemble_config {
  int mu;
  int m;
  int n;
  hibd_u_kind u_kind;
  hibd_a_kind a_kind;
  uint64_t seed;
} hibd_ensemble_config;

HIBD_API hibd_status hibd_dictionary_generate(const hibd_ensemble_config* cfg, hibd_dictionary** out);
/* Column-major u (mu x m) and a (m x n); a == NULL means the identity (m == n). */
HIBD_API hibd_status hibd_dictionary_create(int mu, int m, int n, const double* u, const double* a,
                                            hibd_dictionary** out);
HIBD_API void hibd_dictionary_free(hibd_dictionary* d);
HIBD_API hibd_status hibd_dictionary_dims(const hibd_dictionary* d, int* mu, int* m, int* n);
/* Copies Q = U A (mu x n) into q, which must hold mu * n values. */
HIBD_API hibd_status hibd_dictionary_q(const hibd_dictionary* d, double* q, size_t len);

/* ---- signals ---------------------------------------------------------- */

/* data may be NULL for a zero signal; otherwise users * blocks * block_len values. */
HIBD_API hibd_status hibd_signal_create(int users, int blocks, int block_len, const double* data, hibd_signal** out);
HIBD_API void hibd_signal_free(hibd_signal* s);
HIBD_API hibd_status hibd_signal_shape(const hibd_signal* s, int* users, int* blocks, int* block_len);
/* Borrowed pointer, valid while s lives. */
HIBD_API hibd_status hibd_signal_data(const hibd_signal* s, const double** data, size_t* len);
HIBD_API hibd_status hibd_relative_error(const hibd_signal* estimate, const hibd_signal* truth, double* out);

/* Planted h (x) b, shape (1, mu, n). */
HIBD_API hibd_status hibd_ground_truth(int mu, int n, int s, int sigma, uint64_t seed, hibd_signal** out);
/* Planted three-level signal, shape (users, mu, n); active user ids go to
 * active_out (capacity >= active) when non-NULL. */
HIBD_API hibd_status hibd_demix_ground_truth(int users, int active, int mu, int n, int s, int sigma, uint64_t seed,
                                             hibd_signal** out, int* active_out);
/* rows x cols mixing matrix written column-major to out (rows * cols values). */
HIBD_API hibd_status hibd_mixing_generate(int rows, int cols, uint64_t seed, double* out, size_t len);

/* ---- operators -------------------------------------------------------- */

/* y (length mu) = lifted operator applied to w (shape (1, mu, n)). */
HIBD_API hibd_status hibd_apply_lifted(const hibd_dictionary* d, hibd_lifting kind, const hibd_signal* w, double* y,
                                       size_t y_len);
/* y (length rows * mu) = demixing operator applied to w (shape (cols, mu, n)). */
HIBD_API hibd_status hibd_apply_demix(const double* mixing, int rows, int cols, const hibd_dictionary* d,
                                      const hibd_signal* w, double* y, size_t y_len);

/* ---- solver ----------------------------------------------------------- */

typedef struct hibd_solver_config {
  int max_outer_iters;
  double outer_tol;
  double cg_tol;
  int cg_max_iters;
  double final_ls_tol;
  int final_ls_max_iters;
} hibd_solver_config;

HIBD_API void hibd_solver_config_default(hibd_solver_config* cfg);

typedef struct hibd_solve_info {
  int outer_iters;
  int converged;
  double final_residual;       /* ||y - op w|| after the final least squares */
  double final_rel_residual;   /* relative to ||y|| */
  int final_ls_iters;
} hibd_solve_info;

/* cfg may be NULL for defaults. */
HIBD_API hibd_status hibd_solve_deconvolution(const hibd_dictionary* d, hibd_lifting kind, const double* y,
                                              size_t y_len, int s, int sigma, const hibd_solver_config* cfg,
                                              hibd_result** out);
HIBD_API hibd_status hibd_solve_demixing(const double* mixing, int rows, int cols, const hibd_dictionary* d,
                                         const double* y, size_t y_len, int users_active, int s, int sigma,
                                         const hibd_solver_config* cfg, hibd_result** out);
HIBD_API void hibd_result_free(hibd_result* r);
HIBD_API hibd_status hibd_result_info(const hibd_result* r, hibd_solve_info* info);
/* Borrowed, valid while r lives. */
HIBD_API hibd_status hibd_result_estimate(const hibd_result* r, const hibd_signal** estimate);
HIBD_API hibd_status hibd_result_support(const hibd_result* r, const size_t** flat, size_t* count);

/* ---- trials ----------------------------------------------------------- */

typedef struct hibd_trial_outcome {
  int success;
  int numeric_failure;
  int outer_iters;
  double rel_error;
  double ms;
} hibd_trial_outcome;

HIBD_API hibd_status hibd_run_trial(int n, int mu, int s, int sigma, uint64_t seed, hibd_u_kind u_kind,
                                    const hibd_solver_config* cfg, int record_timing, hibd_trial_outcome* out);

typedef struct hibd_demix_outcome {
  int success;
  int numeric_failure;
  int outer_iters;
  double rel_error;
  double worst_user_error; /* max over active users */
} hibd_demix_outcome;

HIBD_API hibd_status hibd_run_demix_trial(int users, int active, int rows, int mu, int n, int s, int sigma,
                                          uint64_t seed, hibd_u_kind u_kind, const hibd_solver_config* cfg,
                                          hibd_demix_outcome* out);

/* ---- phase diagrams ---------------------------------------------------- */

typedef struct hibd_phase_grid {
  const int* n_values;
  size_t n_count;
  const int* sigma_values;
  size_t sigma_count;
  const int* s_values;
  size_t s_count;
  const int* mu_values;
  size_t mu_count;
  int trials_per_point;
  uint64_t base_seed;
  hibd_u_kind u_kind;
  hibd_solver_config solver;
  int record_timing;
} hibd_phase_grid;

typedef struct hibd_phase_row {
  int n;
  int mu;
  int s;
  int sigma;
  int trials;
  int successes;
  double success_prob;
  double mean_outer_iters;
  double mean_ms;
  int numeric_failures;
} hibd_phase_row;

/* Called after every trial, never concurrently. */
typedef void (*hibd_progress_fn)(size_t done, size_t total, void* user);

/* threads <= 0 uses the available parallelism. */
HIBD_API hibd_status hibd_phase_run(const hibd_phase_grid* grid, int threads, hibd_progress_fn progress, void* user,
                                    hibd_phase_table** out);
HIBD_API void hibd_phase_table_free(hibd_phase_table* t);
HIBD_API hibd_status hibd_phase_table_rows(const hibd_phase_table* t, size_t* count);
HIBD_API hibd_status hibd_phase_table_row(const hibd_phase_table* t, size_t i, hibd_phase_row* row);
/* Each preamble entry becomes a leading "# ..." line. Free *out with hibd_string_free. */
HIBD_API hibd_status hibd_phase_table_to_csv(const hibd_phase_table* t, const char* const* preamble, size_t count,
                                             char** out);
HIBD_API hibd_status hibd_phase_table_from_csv(const char* text, hibd_phase_table** out);
HIBD_API hibd_status hibd_lambda_outcomes_csv(const hibd_phase_table* t, double a, double c, char** out);

/* ---- scaling fit ------------------------------------------------------ */

typedef struct hibd_logistic_fit {
  double a;
  double c_a;
  double intercept;
  double slope;
  double loss;
  int separated;
  double se_intercept;
  double se_slope;
  int iterations;
} hibd_logistic_fit;

HIBD_API hibd_status hibd_lambda_value(double mu, double s, double sigma, double n, double a, double c, double* out);
/* Writes up to cap grid points; *count receives the full grid size (40). */
HIBD_API hibd_status hibd_default_c_grid(double* out, size_t cap, size_t* count);
/* c_grid == NULL or c_count == 0 selects the default grid. */
HIBD_API hibd_status hibd_fit_lambda_scaling(const hibd_phase_table* t, double a, const double* c_grid, size_t c_count,
                                             hibd_logistic_fit* out);

/* ---- restricted isometry diagnostics ---------------------------------- */

typedef struct hibd_rip_report {
  int s;
  int sigma;
  int trials;
  uint64_t seed;
  double delta_lower;
  int has_exact;
  double exact;
} hibd_rip_report;

/* Monte Carlo estimate for the lifted operator on (1, mu, n); with exact != 0
 * also the enumerated constant (guard <= 0 selects the default 1e8). */
HIBD_API hibd_status hibd_ripcheck_lifted(const hibd_dictionary* d, hibd_lifting kind, int s, int sigma, int trials,
                                          uint64_t seed, int exact, double guard, hibd_rip_report* out);

typedef struct hibd_factorization_report {
  double delta_h;
  double delta_a;
  double delta_hat;
  double bound;
  int holds;
} hibd_factorization_report;

HIBD_API hibd_status hibd_check_factorization(const hibd_dictionary* d, int s, int sigma, double guard,
                                              hibd_factorization_report* out);

#ifdef __cplusplus
}
#endif

#endif /* HIBD_HIBD_H_ */
