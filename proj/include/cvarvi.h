/* C interface to the CVaR variational-inequality solvers.
 *
 * Every function returns a cvarvi_status; outputs are written through
 * pointers. On failure cvarvi_last_error() describes what went wrong for
 * the current thread. Opaque handles are freed with their _free function.
 * All calls are safe to use from multiple threads as long as each handle
 * is only destroyed once.
 */
#ifndef CVARVI_H
#define CVARVI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cvarvi_status {
  CVARVI_OK = 0,
  CVARVI_INVALID_ARGUMENT = 1,
  CVARVI_UNSUPPORTED = 2,
  CVARVI_INFEASIBLE = 3,
  CVARVI_DIVERGED = 4,
  CVARVI_IO_ERROR = 5,
  CVARVI_MODEL_ERROR = 6,
  CVARVI_INTERNAL_ERROR = 7
} cvarvi_status;

/* Message for the most recent failing call on this thread. */
const char* cvarvi_last_error(void);

/* Child stream `index` of `seed`; the harness uses this for replication
 * seeds (see the README for the exact definition). */
uint64_t cvarvi_derive_seed(uint64_t seed, uint64_t index);

/* ---------------- CVaR estimation ---------------- */

/* Empirical CVaR of `count` scalar samples at level alpha. Either output
 * pointer may be NULL. */
cvarvi_status cvarvi_empirical_cvar(const double* samples, size_t count, double alpha,
                                    double* value, double* minimizer_t);

/* Exact CVaR of offset + noise_gain * U(0,1); noise_gain >= 0. */
cvarvi_status cvarvi_exact_cvar_affine_uniform(double offset, double noise_gain, double alpha,
                                               double* value);

/* ---------------- sample-size calculus ---------------- */

typedef enum cvarvi_variant {
  CVARVI_VARIANT_PENALTY = 0,
  CVARVI_VARIANT_MULTIPLIER = 1
} cvarvi_variant;

typedef struct cvarvi_complexity_inputs {
  int32_t n;
  double alpha;
  double z1;
  double z2;
  double c_f;
  double h_plus;
  double c_d; /* penalty variant only */
  double epsilon;
} cvarvi_complexity_inputs;

cvarvi_status cvarvi_bias_bound(int32_t n, double alpha, double z1, double z2, int64_t n_samples,
                                double* out);
cvarvi_status cvarvi_concentration_tail(double alpha, double z1, double z2, int64_t n_samples,
                                        double z, double* out);
cvarvi_status cvarvi_required_bias(cvarvi_variant variant, const cvarvi_complexity_inputs* inputs,
                                   double* out);
cvarvi_status cvarvi_required_samples(cvarvi_variant variant,
                                      const cvarvi_complexity_inputs* inputs, int64_t* out);

/* ---------------- problems ---------------- */

typedef struct cvarvi_problem cvarvi_problem;

/* Builtin two-OD, five-path benchmark (alpha = 0.2) with its reference
 * equilibrium and pinned initial point. */
cvarvi_status cvarvi_problem_benchmark(cvarvi_problem** out);

/* Load a JSON network description (see README) at the given risk level. */
cvarvi_status cvarvi_problem_from_network_file(const char* path, double alpha,
                                               cvarvi_problem** out);
void cvarvi_problem_free(cvarvi_problem* problem);

int32_t cvarvi_problem_dimension(const cvarvi_problem* problem);        /* n */
int32_t cvarvi_problem_num_inequalities(const cvarvi_problem* problem); /* s */
int32_t cvarvi_problem_num_equalities(const cvarvi_problem* problem);   /* t */
int32_t cvarvi_problem_num_od_pairs(const cvarvi_problem* problem);     /* 0 if not a game */
double cvarvi_problem_alpha(const cvarvi_problem* problem);
int32_t cvarvi_problem_has_exact_map(const cvarvi_problem* problem);
int32_t cvarvi_problem_has_reference(const cvarvi_problem* problem);

/* h_out must hold n doubles. UNSUPPORTED when the problem has no reference /
 * pinned initial point. */
cvarvi_status cvarvi_problem_reference(const cvarvi_problem* problem, double* h_out);
cvarvi_status cvarvi_problem_initial_point(const cvarvi_problem* problem, double* h_out);

cvarvi_status cvarvi_problem_project(const cvarvi_problem* problem, const double* x, double* out);
cvarvi_status cvarvi_problem_exact_map(const cvarvi_problem* problem, const double* h,
                                       double* f_out);
/* Empirical map estimate from n_samples shared events drawn from `seed`. */
cvarvi_status cvarvi_problem_empirical_map(const cvarvi_problem* problem, const double* h,
                                           int64_t n_samples, uint64_t seed, double* f_out);

/* ---------------- solving ---------------- */

typedef enum cvarvi_algorithm {
  CVARVI_ALG_PROJECTED = 0,
  CVARVI_ALG_PENALTY = 1,
  CVARVI_ALG_MULTIPLIER = 2
} cvarvi_algorithm;

/* Initialize with cvarvi_solve_options_init, then override fields. Pointer
 * fields may stay NULL to use defaults; pointed-to arrays only need to live
 * through the cvarvi_solve call. */
typedef struct cvarvi_solve_options {
  int32_t algorithm; /* cvarvi_algorithm */

  /* gamma_k = step_scale / (k + step_shift), k counted from step_start_index */
  double step_scale;
  double step_shift;
  int64_t step_start_index;

  /* N_k = sample_n0, or n0 + floor(rate * k^power) when sample_growing */
  int64_t sample_n0;
  int32_t sample_growing;
  double sample_rate;
  double sample_power;

  int64_t iterations;

  double penalty_c;
  int32_t has_penalty_ramp;
  double ramp_c_init;
  double ramp_c_target;
  int64_t ramp_iters;

  const double* safeguard_lower; /* length n; both or neither */
  const double* safeguard_upper;
  const double* multiplier_safeguard_lower; /* length s + t; both or neither */
  const double* multiplier_safeguard_upper;

  const double* h0;      /* length n; NULL uses the problem's initial point */
  const double* lambda0; /* length s; NULL uses zeros */
  const double* mu0;     /* length t; NULL uses zeros */

  /* error column: NULL reference uses the problem's reference when it has
   * one; set track_reference = 0 to disable entirely */
  const double* reference;
  int32_t track_reference;

  uint64_t seed;
  int64_t downsample_stride;
} cvarvi_solve_options;

void cvarvi_solve_options_init(cvarvi_solve_options* options);

typedef struct cvarvi_trace cvarvi_trace;

/* Runs the configured scheme. Returns CVARVI_DIVERGED when the iterate guard
 * trips; the partial trace is still written to *out in that case. */
cvarvi_status cvarvi_solve(const cvarvi_problem* problem, const cvarvi_solve_options* options,
                           cvarvi_trace** out);
void cvarvi_trace_free(cvarvi_trace* trace);

size_t cvarvi_trace_size(const cvarvi_trace* trace);
int32_t cvarvi_trace_dimension(const cvarvi_trace* trace);
/* Multiplier column counts; 0/0 for schemes without multipliers. */
void cvarvi_trace_multiplier_dims(const cvarvi_trace* trace, int32_t* s, int32_t* t);
int32_t cvarvi_trace_has_error(const cvarvi_trace* trace);

/* Copy row `row`; any output pointer may be NULL. h needs n doubles, lambda
 * and mu the sizes reported by cvarvi_trace_multiplier_dims. */
cvarvi_status cvarvi_trace_row(const cvarvi_trace* trace, size_t row, int64_t* k, double* gamma,
                               int64_t* n_samples, double* h, double* lambda, double* mu,
                               double* f_hat_norm, double* error_to_reference);
cvarvi_status cvarvi_trace_final(const cvarvi_trace* trace, int64_t* k, double* h,
                                 double* error_to_reference);

/* ---------------- equilibrium verification ---------------- */

typedef struct cvarvi_cwe_report {
  int32_t is_equilibrium;
  double max_cost_gap;
  double demand_residual_inf;
  double used_path_tol;
  double cost_gap_tol;
  double demand_tol;
} cvarvi_cwe_report;

/* Wardrop-style equilibrium check of a candidate flow. empirical_samples = 0
 * uses the exact CVaR map; > 0 estimates costs from that many shared events
 * drawn from `seed`. demand_residual may be NULL or hold num_od_pairs
 * doubles. */
cvarvi_status cvarvi_verify_cwe(const cvarvi_problem* problem, const double* h,
                                double used_path_tol, double cost_gap_tol,
                                int64_t empirical_samples, uint64_t seed,
                                cvarvi_cwe_report* report, double* demand_residual);

/* KKT residuals at h with least-squares multiplier recovery; uses the exact
 * map when available, otherwise an empirical estimate with 10000 samples. */
cvarvi_status cvarvi_kkt_residuals(const cvarvi_problem* problem, const double* h,
                                   double* stationarity, double* primal, double* complementarity);

#ifdef __cplusplus
}
#endif

#endif /* CVARVI_H */
