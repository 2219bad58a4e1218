#ifndef SLOWFAST_SLOWFAST_H
#define SLOWFAST_SLOWFAST_H

/*
 * C interface of the slow-fast library. All objects are opaque handles
 * released by the matching *_destroy function. Functions return SF_OK or an
 * error status; sf_last_error() then describes the failure for the calling
 * thread.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(SLOWFAST_BUILDING_LIBRARY)
#define SF_API __attribute__((visibility("default")))
#else
#define SF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_ARGUMENT = 1,
  SF_ERR_SINGULAR_SYSTEM = 2,
  SF_ERR_NOT_IRREDUCIBLE = 3,
  SF_ERR_ANCHOR_MISMATCH = 4,
  SF_ERR_CLASS_STRUCTURE_VARIES = 5,
  SF_ERR_NO_ABSORPTION_BOUND = 6,
  SF_ERR_SEQUENCE_TOO_SHORT = 7,
  SF_ERR_TRUNCATION_INSUFFICIENT = 8,
  SF_ERR_DIMENSION_MISMATCH = 9,
  SF_ERR_BALL_VIOLATION = 10,
  SF_ERR_CLASS_MISSING = 11,
  SF_ERR_RESOURCE_LIMIT = 12,
  SF_ERR_IO = 13,
  SF_ERR_INTERNAL = 99
} sf_status;

typedef enum sf_frozen_measure_mode {
  SF_STATE_DEPENDENT = 0,
  SF_ANCHORED_AT_X0 = 1
} sf_frozen_measure_mode;

typedef struct sf_model sf_model;
typedef struct sf_analysis sf_analysis;
typedef struct sf_trajectory sf_trajectory;
typedef struct sf_report sf_report;

SF_API const char* sf_version(void);
SF_API const char* sf_status_name(sf_status status);
/* Message of the last failure on this thread; "" after a success. */
SF_API const char* sf_last_error(void);

/* ---- models ---- */

/* Built-in models: "toy", "coupled_navigation", "ergodic_variant".
 * Parameters are passed as parallel key/value arrays. */
SF_API sf_status sf_model_create(const char* name, const char* const* keys, const double* values,
                                 size_t count, sf_model** out);

/* Fills probs[0..state_count) with row v of P_x. */
typedef void (*sf_row_fn)(const double* x, size_t v, double* probs, void* user);
/* Fills out[0..dim) with a(x, v). */
typedef void (*sf_drift_fn)(const double* x, size_t v, double* out, void* user);

typedef struct sf_custom_model {
  const char* description;
  size_t dim;
  size_t state_count;
  const char* const* labels; /* state_count labels */
  sf_row_fn row;
  sf_drift_fn drift;
  void* user;
  double lipschitz_bound;
  double drift_bound;
  int constant_in_x;
  int drift_x_independent;
  double lambda;
  double clock_multiplicity;
} sf_custom_model;

/* Callbacks must be thread-safe and must outlive the model. */
SF_API sf_status sf_model_create_custom(const sf_custom_model* spec, sf_model** out);
SF_API sf_status sf_model_with_lambda(const sf_model* model, double lambda, sf_model** out);
SF_API void sf_model_destroy(sf_model* model);

SF_API size_t sf_model_dim(const sf_model* model);
SF_API size_t sf_model_state_count(const sf_model* model);
SF_API double sf_model_lambda(const sf_model* model);
SF_API double sf_model_rate(const sf_model* model);
SF_API uint64_t sf_model_hash(const sf_model* model);
SF_API const char* sf_model_description(const sf_model* model);
SF_API const char* sf_model_state_label(const sf_model* model, size_t v);
SF_API sf_status sf_model_state_index(const sf_model* model, const char* label, size_t* out);
/* Row-major state_count x state_count matrix P_x. */
SF_API sf_status sf_model_transition_matrix(const sf_model* model, const double* x, double* out);
SF_API sf_status sf_model_drift(const sf_model* model, const double* x, size_t v, double* out);

/* ---- frozen analysis ---- */

SF_API sf_status sf_analyze(const sf_model* model, const double* x, sf_analysis** out);
SF_API void sf_analysis_destroy(sf_analysis* analysis);
SF_API size_t sf_analysis_class_count(const sf_analysis* analysis);
SF_API size_t sf_analysis_class_size(const sf_analysis* analysis, size_t class_index);
SF_API sf_status sf_analysis_class_members(const sf_analysis* analysis, size_t class_index,
                                           size_t* out);
SF_API size_t sf_analysis_transient_count(const sf_analysis* analysis);
SF_API sf_status sf_analysis_transient(const sf_analysis* analysis, size_t* out);
SF_API sf_status sf_analysis_absorption(const sf_analysis* analysis, size_t v, size_t class_index,
                                        double* out);
/* Weights aligned with sf_analysis_class_members. */
SF_API sf_status sf_analysis_stationary(const sf_analysis* analysis, size_t class_index,
                                        double* out);
SF_API sf_status sf_analysis_limit_law(const sf_analysis* analysis, size_t v, double* out);

typedef struct sf_certificate {
  size_t n_tilde;
  double z0;
  double lipschitz_estimate;
  double lipschitz_declared;
  int classes_stable;
  size_t class_count;
  size_t transient_count;
} sf_certificate;

/* grid holds points * dim coordinates. target_z0 >= 1 requests the smallest
 * n_tilde with worst unabsorbed mass < 1. */
SF_API sf_status sf_certify(const sf_model* model, const double* grid, size_t points,
                            size_t max_steps, double target_z0, sf_certificate* out);

/* Poissonized frozen law at x after time t (aggregated rate of the model),
 * and its TV distance (sum of absolute differences) to the limit law. */
SF_API sf_status sf_poissonized_law(const sf_model* model, const double* x, size_t v0, double t,
                                    double tail_tol, double* law, double* tv_to_limit);

/* ---- simulation ---- */

typedef struct sf_sim_options {
  double h;         /* 0 selects t_end / 1e4 */
  double report_dt; /* 0 records t = 0, jump times and t_end */
  double max_expected_jumps;
  uint64_t replica;
} sf_sim_options;

SF_API sf_sim_options sf_sim_options_default(void);

SF_API sf_status sf_simulate_coupled(const sf_model* model, const double* x0, size_t v0,
                                     double t_end, uint64_t seed, const sf_sim_options* options,
                                     sf_trajectory** out);
SF_API sf_status sf_simulate_frozen(const sf_model* model, const double* x_frozen, size_t v0,
                                    double t_end, uint64_t seed, const sf_sim_options* options,
                                    sf_trajectory** out);
/* points holds count * dim coordinates; the k-th jump uses point k. */
SF_API sf_status sf_simulate_sequence_driven(const sf_model* model, const double* x0, size_t v0,
                                             const double* points, size_t count, double t_end,
                                             uint64_t seed, const sf_sim_options* options,
                                             sf_trajectory** out);
SF_API sf_status sf_simulate_averaged(const sf_model* model, const double* x0, size_t v0,
                                      double t_end, uint64_t seed, sf_frozen_measure_mode mode,
                                      const sf_sim_options* options, size_t* zeta,
                                      sf_trajectory** out);

SF_API void sf_trajectory_destroy(sf_trajectory* trajectory);
SF_API size_t sf_trajectory_length(const sf_trajectory* trajectory);
SF_API size_t sf_trajectory_jump_count(const sf_trajectory* trajectory);
SF_API int sf_trajectory_has_slow(const sf_trajectory* trajectory);
SF_API double sf_trajectory_time(const sf_trajectory* trajectory, size_t row);
SF_API size_t sf_trajectory_fast_state(const sf_trajectory* trajectory, size_t row);
SF_API int sf_trajectory_jumped(const sf_trajectory* trajectory, size_t row);
SF_API sf_status sf_trajectory_slow_state(const sf_trajectory* trajectory, size_t row,
                                          double* out);
SF_API sf_status sf_trajectory_write_csv(const sf_trajectory* trajectory, const sf_model* model,
                                         const char* path, const char* provenance);

/* Mean and unbiased variance of f(X_t) over independent coupled replicas.
 * observable is one of "coordinate", "tanh", "bump". */
SF_API sf_status sf_monte_carlo(const sf_model* model, const double* x0, size_t v0, double t,
                                const char* observable, size_t coordinate, size_t replicas,
                                uint64_t seed, double h, double* mean, double* variance);

/* ---- experiments ---- */

typedef struct sf_weak_error_options {
  const double* x0;
  size_t v0;
  double t;
  const double* lambdas;
  size_t lambda_count;
  size_t replicas;
  uint64_t seed;
  double h;
  sf_frozen_measure_mode mode;
  const char* observable;
  size_t coordinate;
  double dominance_ratio;
} sf_weak_error_options;

SF_API sf_weak_error_options sf_weak_error_options_default(void);
SF_API sf_status sf_weak_error(const sf_model* model, const sf_weak_error_options* options,
                               sf_report** out);

typedef struct sf_decay_options {
  const double* x;
  size_t v0;
  const double* times; /* NULL selects 1..20 */
  size_t time_count;
  const double* lambdas; /* NULL selects {1} */
  size_t lambda_count;
  double tail_tol;
  size_t envelope_steps;
  size_t max_steps;
  double target_z0;
} sf_decay_options;

SF_API sf_decay_options sf_decay_options_default(void);
/* envelope may be NULL. */
SF_API sf_status sf_fast_decay(const sf_model* model, const sf_decay_options* options,
                               sf_report** decay, sf_report** envelope);

typedef struct sf_gap_options {
  const double* x0;
  size_t v0;
  const double* deltas;
  size_t delta_count;
  double t;
  double lambda;
  const double* direction; /* NULL selects (1/N, ..., 1/N) */
  const double* marginal_lambdas;
  size_t marginal_count;
  size_t marginal_replicas;
  uint64_t seed;
} sf_gap_options;

SF_API sf_gap_options sf_gap_options_default(void);
SF_API sf_status sf_sequence_gap(const sf_model* model, const sf_gap_options* options,
                                 sf_report** out);

SF_API void sf_report_destroy(sf_report* report);
SF_API const char* sf_report_name(const sf_report* report);
SF_API size_t sf_report_column_count(const sf_report* report);
SF_API const char* sf_report_column(const sf_report* report, size_t column);
SF_API size_t sf_report_row_count(const sf_report* report);
SF_API double sf_report_value(const sf_report* report, size_t row, size_t column);
SF_API size_t sf_report_summary_count(const sf_report* report);
SF_API const char* sf_report_summary_key(const sf_report* report, size_t index);
/* NULL when the key is absent. */
SF_API const char* sf_report_summary_value(const sf_report* report, const char* key);
/* Either path may be NULL. */
SF_API sf_status sf_report_write(const sf_report* report, const char* csv_path,
                                 const char* summary_path, const char* provenance);

/* ---- acceptance ---- */

typedef struct sf_verify_options {
  uint64_t seed;
  const int* criteria; /* NULL runs all */
  size_t criteria_count;
  size_t absorption_replicas;
  double absorption_sigmas;
  double decay_min_r_squared;
  double gap_max_variation;
  double navigation_beta;
  size_t weak_replicas;
  double slope_threshold;
  double dominance_ratio;
  double ergodic_p;
  double drift_tolerance;
  size_t poisson_replicas;
  double poisson_sigmas;
} sf_verify_options;

typedef void (*sf_verify_progress)(int criterion, const char* name, int passed,
                                   const char* detail, double seconds, void* user);

SF_API sf_verify_options sf_verify_options_default(void);
/* Writes the byte-stable acceptance report to report_path (if not NULL),
 * preceded by provenance as '#' comment lines, and sets *all_passed. */
SF_API sf_status sf_verify(const sf_verify_options* options, const char* report_path,
                           const char* provenance, sf_verify_progress progress, void* user,
                           int* all_passed);

/* Atomic file write (temporary file, then rename). */
SF_API sf_status sf_write_file(const char* path, const char* contents);

#ifdef __cplusplus
}
#endif

#endif /* SLOWFAST_SLOWFAST_H */
