#ifndef RSMA_JAM_H
#define RSMA_JAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RsjStatus {
  RSJ_STATUS_OK = 0,
  // A required pointer argument was null.
  RSJ_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  RSJ_STATUS_INVALID_UTF8 = 2,
  RSJ_STATUS_INVALID_INPUT = 3,
  RSJ_STATUS_UNSUPPORTED = 4,
  RSJ_STATUS_CONFIG = 5,
  // The optimization problem has no strictly feasible point.
  RSJ_STATUS_INFEASIBLE = 6,
  RSJ_STATUS_NUMERICAL = 7,
  RSJ_STATUS_IO = 8,
  // An index argument was out of range.
  RSJ_STATUS_OUT_OF_RANGE = 9,
  // The experiment ran but some cells have no result.
  RSJ_STATUS_PARTIAL = 10,
  // Internal panic caught at the boundary.
  RSJ_STATUS_PANIC = 11,
} RsjStatus;

// Transmission scheme.
typedef enum RsjScheme {
  RSJ_SCHEME_RSMA = 0,
  RSJ_SCHEME_SDMA = 1,
} RsjScheme;

// Experiment configuration with its channel realization.
typedef struct RsjScenario RsjScenario;

// Optimized precoders and their rate report.
typedef struct RsjSolution RsjSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *rsj_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *rsj_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void rsj_string_free(char *s);

// Builds a scenario from an experiment config in JSON. Omitted fields take
// their defaults, so `"{}"` is the default grid.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be valid for writes.
enum RsjStatus rsj_scenario_from_json(const char *config_json, struct RsjScenario **out);

// # Safety
// `scenario` must be null or a handle from [`rsj_scenario_from_json`] not yet freed.
void rsj_scenario_free(struct RsjScenario *scenario);

// Number of SNR points in the scenario, or 0 for a null handle.
//
// # Safety
// `scenario` must be null or a live handle.
size_t rsj_scenario_num_snr(const struct RsjScenario *scenario);

// Number of pilot sets in the scenario, or 0 for a null handle.
//
// # Safety
// `scenario` must be null or a live handle.
size_t rsj_scenario_num_pilot_sets(const struct RsjScenario *scenario);

// Optimizes one cell of the scenario grid. The result is identical to the
// corresponding cell of [`rsj_run_experiment`].
//
// # Safety
// `scenario` must be a live handle; `out` must be valid for writes.
enum RsjStatus rsj_optimize(const struct RsjScenario *scenario,
                            size_t snr_index,
                            size_t pilot_set_index,
                            enum RsjScheme scheme,
                            struct RsjSolution **out);

// # Safety
// `solution` must be null or a handle from [`rsj_optimize`] not yet freed.
void rsj_solution_free(struct RsjSolution *solution);

// Sum-rate in bits per subcarrier, or NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double rsj_solution_sum_rate(const struct RsjSolution *solution);

// Common-stream rate in bits per subcarrier, or NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double rsj_solution_common_rate(const struct RsjSolution *solution);

// Number of users, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t rsj_solution_num_users(const struct RsjSolution *solution);

// Rate of user `k` (private plus its common share) in bits per subcarrier.
//
// # Safety
// `solution` must be a live handle; `out` must be valid for writes.
enum RsjStatus rsj_solution_user_rate(const struct RsjSolution *solution, size_t k, double *out);

// Smallest average jamming margin over the jammed pilots. Writes NaN
// when the scenario has no adversaries.
//
// # Safety
// `solution` must be a live handle; `out` must be valid for writes.
enum RsjStatus rsj_solution_jam_margin(const struct RsjSolution *solution, double *out);

// Outer iterations run, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t rsj_solution_iterations(const struct RsjSolution *solution);

// Whether the outer loop met its tolerance before the iteration cap.
//
// # Safety
// `solution` must be null or a live handle.
bool rsj_solution_converged(const struct RsjSolution *solution);

// Full rate report and precoders as JSON.
//
// # Safety
// `solution` must be a live handle; `out` must be valid for writes.
enum RsjStatus rsj_solution_to_json(const struct RsjSolution *solution, char **out);

// Runs the whole grid of a JSON experiment config and returns the result
// table as CSV. With a non-null `out_dir` all output files are written
// there as well. Returns [`RsjStatus::Partial`], with the CSV, when some
// cells have no result.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_dir` must be null or
// one; `csv_out` must be valid for writes.
enum RsjStatus rsj_run_experiment(const char *config_json, const char *out_dir, char **csv_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSMA_JAM_H */
