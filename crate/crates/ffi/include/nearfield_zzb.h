#ifndef NEARFIELD_ZZB_H
#define NEARFIELD_ZZB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NfzHGrid {
  NFZ_H_GRID_GEOMETRIC = 0,
  NFZ_H_GRID_UNIFORM = 1,
} NfzHGrid;

typedef enum NfzDeltaSearch {
  NFZ_DELTA_SEARCH_SYMMETRIC = 0,
  NFZ_DELTA_SEARCH_NON_NEGATIVE = 1,
  NFZ_DELTA_SEARCH_ZERO_ONLY = 2,
} NfzDeltaSearch;

typedef enum NfzRefine {
  NFZ_REFINE_OFF = 0,
  NFZ_REFINE_PARABOLIC = 1,
  NFZ_REFINE_GOLDEN = 2,
} NfzRefine;

typedef enum NfzObjective {
  NFZ_OBJECTIVE_NONCOHERENT = 0,
  NFZ_OBJECTIVE_COHERENT = 1,
} NfzObjective;

typedef enum NfzGridSpacing {
  NFZ_GRID_SPACING_INFORMATION = 0,
  NFZ_GRID_SPACING_UNIFORM = 1,
} NfzGridSpacing;

typedef enum NfzStatus {
  NFZ_STATUS_OK = 0,
  NFZ_STATUS_NULL_POINTER = 1,
  NFZ_STATUS_INVALID_ARGUMENT = 2,
  NFZ_STATUS_SINGULAR = 3,
  NFZ_STATUS_DOMAIN = 4,
  NFZ_STATUS_CONDITIONING = 5,
  NFZ_STATUS_NON_CONVERGENCE = 6,
  NFZ_STATUS_CONFIG = 7,
  NFZ_STATUS_MISSING_SERIES = 8,
  NFZ_STATUS_IO = 9,
  NFZ_STATUS_OUT_OF_RANGE = 10,
  NFZ_STATUS_PANIC = 11,
} NfzStatus;

typedef enum NfzParameter {
  NFZ_PARAMETER_DISTANCE = 0,
  NFZ_PARAMETER_AOA = 1,
} NfzParameter;

typedef enum NfzZzbKind {
  // Distance with the angle known (zero-width angle prior).
  NFZ_ZZB_KIND_KNOWN_AOA = 0,
  NFZ_ZZB_KIND_JOINT_DISTANCE = 1,
  NFZ_ZZB_KIND_JOINT_AOA = 2,
} NfzZzbKind;

typedef enum NfzFormat {
  NFZ_FORMAT_CSV = 0,
  NFZ_FORMAT_JSON = 1,
} NfzFormat;

typedef struct NfzArray NfzArray;

typedef struct NfzCurves NfzCurves;

typedef struct NfzPrior NfzPrior;

typedef struct NfzScenario NfzScenario;

// Quadrature settings; start from `nfz_quadrature_default`.
typedef struct NfzQuadrature {
  size_t n_h;
  size_t n_d;
  size_t n_theta;
  size_t n_dtheta;
  double convergence_target;
  enum NfzHGrid h_grid;
  double h_min_rel;
  enum NfzDeltaSearch delta_search;
  uint32_t candidate_refinement;
  uint32_t max_doublings;
} NfzQuadrature;

// Monte Carlo settings; `search_grid_theta == 0` picks the default.
typedef struct NfzMonteCarlo {
  size_t num_trials;
  uint64_t seed;
  size_t search_grid_d;
  size_t search_grid_theta;
  enum NfzRefine refine;
  enum NfzObjective objective;
  enum NfzGridSpacing grid_spacing;
} NfzMonteCarlo;

typedef struct NfzMse {
  double mse_d;
  double mse_theta;
  double stderr_d;
  double stderr_theta;
  double grid_floor_d;
  double grid_floor_theta;
  size_t trials;
  size_t ties;
} NfzMse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static nul-terminated string.
const char *nfz_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *nfz_last_error(void);

struct NfzQuadrature nfz_quadrature_default(void);

struct NfzMonteCarlo nfz_monte_carlo_default(void);

enum NfzStatus nfz_array_new(size_t num_antennas,
                             double spacing_m,
                             double carrier_freq_hz,
                             struct NfzArray **out);

enum NfzStatus nfz_array_with_aperture(size_t num_antennas,
                                       double aperture_m,
                                       double carrier_freq_hz,
                                       struct NfzArray **out);

void nfz_array_free(struct NfzArray *array);

// Uniform prior box; equal angle limits give a known angle.
enum NfzStatus nfz_prior_new(double d_min,
                             double d_max,
                             double theta_min,
                             double theta_max,
                             struct NfzPrior **out);

void nfz_prior_free(struct NfzPrior *prior);

double nfz_q_function(double x);

enum NfzStatus nfz_correlation(const struct NfzArray *array,
                               double d,
                               double theta,
                               double delta_d,
                               double delta_theta,
                               double *out);

enum NfzStatus nfz_pmin(const struct NfzArray *array,
                        double snr_linear,
                        double d,
                        double theta,
                        double delta_d,
                        double delta_theta,
                        double *out);

enum NfzStatus nfz_crb_local(const struct NfzArray *array,
                             enum NfzParameter parameter,
                             double snr_linear,
                             double d,
                             double theta,
                             double *out);

// Prior-averaged CRB. `quad` may be NULL for the defaults.
enum NfzStatus nfz_crb_global(const struct NfzArray *array,
                              enum NfzParameter parameter,
                              double snr_linear,
                              const struct NfzPrior *prior,
                              const struct NfzQuadrature *quad,
                              double *out);

// ZZB at `n` SNRs. Writes `n` values to `values` and, unless NULL, `n`
// convergence flags to `converged`.
enum NfzStatus nfz_zzb_sweep(const struct NfzArray *array,
                             enum NfzZzbKind kind,
                             const struct NfzPrior *prior,
                             const double *snr_linear,
                             size_t n,
                             const struct NfzQuadrature *quad,
                             double *values,
                             bool *converged);

enum NfzStatus nfz_zzb_highsnr_asymptote(const struct NfzArray *array,
                                         double snr_linear,
                                         const struct NfzPrior *prior,
                                         double *out);

// ML mean-squared error with truths drawn over the prior. `mc` may be NULL
// for the defaults.
enum NfzStatus nfz_mle_mse(const struct NfzArray *array,
                           double snr_linear,
                           const struct NfzPrior *prior,
                           const struct NfzMonteCarlo *mc,
                           struct NfzMse *out);

// Parses a scenario document (UTF-8 JSON).
enum NfzStatus nfz_scenario_from_json(const char *json, struct NfzScenario **out);

void nfz_scenario_free(struct NfzScenario *scenario);

// Runs every engine of the scenario. Per-point engine failures do not fail
// the call; they are listed in each curve's metadata.
enum NfzStatus nfz_scenario_run(const struct NfzScenario *scenario, struct NfzCurves **out);

void nfz_curves_free(struct NfzCurves *curves);

// Number of curves; 0 for NULL.
size_t nfz_curves_len(const struct NfzCurves *curves);

// True when every ZZB value of every curve met its convergence target.
enum NfzStatus nfz_curves_converged(const struct NfzCurves *curves, bool *out);

// Renders all curves; free the string with `nfz_string_free`.
enum NfzStatus nfz_curves_render(const struct NfzCurves *curves, enum NfzFormat format, char **out);

// SNR threshold of curve `index` in dB; `found` is false when the curve
// never settles within `ratio` of the global CRB.
enum NfzStatus nfz_curves_threshold(const struct NfzCurves *curves,
                                    size_t index,
                                    double ratio,
                                    double *threshold_db,
                                    bool *found);

void nfz_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEARFIELD_ZZB_H */
