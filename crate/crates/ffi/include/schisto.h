#ifndef SCHISTO_H
#define SCHISTO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SchistoStatus {
  SCHISTO_STATUS_OK = 0,
  SCHISTO_STATUS_NULL_POINTER = 1,
  SCHISTO_STATUS_INVALID_ARGUMENT = 2,
  SCHISTO_STATUS_CONFIG_ERROR = 3,
  SCHISTO_STATUS_SOLVER_FAILED = 4,
  SCHISTO_STATUS_INTEGRATION_DIVERGED = 5,
  SCHISTO_STATUS_IO_ERROR = 6,
  SCHISTO_STATUS_PANIC = 7,
} SchistoStatus;

/**
 * Tracked outcomes, in summary order.
 */
typedef enum SchistoMetric {
  SCHISTO_METRIC_INFECTION_RATE = 0,
  SCHISTO_METRIC_LABOR_AVAIL = 1,
  SCHISTO_METRIC_LABOR_FOOD = 2,
  SCHISTO_METRIC_LABOR_VEG = 3,
  SCHISTO_METRIC_LEISURE = 4,
  SCHISTO_METRIC_FERT_PER_HA = 5,
  SCHISTO_METRIC_VEG_STOCK_T = 6,
  SCHISTO_METRIC_QV_KG = 7,
  SCHISTO_METRIC_INCOME_KFCFA = 8,
  SCHISTO_METRIC_UTILITY = 9,
} SchistoMetric;

/**
 * Opaque simulation configuration.
 */
typedef struct SchistoConfig SchistoConfig;

/**
 * Opaque set of summary cells.
 */
typedef struct SchistoSummary SchistoSummary;

/**
 * Opaque single trajectory.
 */
typedef struct SchistoTrajectory SchistoTrajectory;

/**
 * One simulated year, copied out of a trajectory.
 */
typedef struct SchistoPeriodRecord {
  uint32_t year;
  uint32_t infected;
  double a_l;
  double labor_food;
  double labor_veg;
  double leisure;
  double fert_kg;
  double fert_per_ha;
  double q_v;
  double veg_stock;
  double income_kfcfa;
  double utility;
  double prevalence_next;
} SchistoPeriodRecord;

typedef struct SchistoBand {
  double median;
  double p05;
  double p95;
} SchistoBand;

/**
 * Outcome of an ecology-only steady-state check.
 */
typedef struct SchistoSteadyState {
  double final_prevalence;
  /**
   * Relative change over the final year: vegetation, susceptible and
   * infected snails, miracidia, cercariae, susceptible and infected humans.
   */
  double final_year_drift[7];
  bool steady;
  uint64_t clamps;
} SchistoSteadyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's most recent error message, or returns null
 * when there is none. Release with [`schisto_string_free`].
 */
char *schisto_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void schisto_string_free(char *s);

/**
 * A configuration holding every default.
 */
struct SchistoConfig *schisto_config_default(void);

/**
 * Parses configuration text (UTF-8, NUL-terminated) into a new handle.
 *
 * # Safety
 * `text` must be a valid C string; `out` must be writable.
 */
enum SchistoStatus schisto_config_parse(const char *text, struct SchistoConfig **out);

/**
 * Renders the effective configuration as configuration-file text.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_config_render(const struct SchistoConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void schisto_config_free(struct SchistoConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum SchistoStatus schisto_config_set_seed(struct SchistoConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum SchistoStatus schisto_config_set_years(struct SchistoConfig *cfg, uint32_t years);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum SchistoStatus schisto_config_set_land(struct SchistoConfig *cfg, double land_ha);

/**
 * Enables or disables vegetation harvest. Disabling also zeroes the
 * harvest productivity, matching the no-harvest scenario.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum SchistoStatus schisto_config_set_harvest(struct SchistoConfig *cfg, bool allow);

/**
 * Runs one trajectory with the random stream of replicate `index` under
 * the configured master seed.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_run_trajectory(const struct SchistoConfig *cfg,
                                          uint64_t index,
                                          struct SchistoTrajectory **out);

/**
 * Number of yearly records, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t schisto_trajectory_len(const struct SchistoTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_trajectory_record(const struct SchistoTrajectory *traj,
                                             size_t index,
                                             struct SchistoPeriodRecord *out);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void schisto_trajectory_free(struct SchistoTrajectory *traj);

/**
 * Replicated runs of the configured cell, summarized into one cell.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_monte_carlo(const struct SchistoConfig *cfg,
                                       size_t replicates,
                                       struct SchistoSummary **out);

/**
 * The six-cell scenario suite (three land endowments, with and without
 * harvest).
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_scenario_suite(const struct SchistoConfig *cfg,
                                          size_t replicates,
                                          struct SchistoSummary **out);

/**
 * Number of cells, or 0 for a null handle.
 *
 * # Safety
 * `summary` must be null or a live handle.
 */
size_t schisto_summary_cells(const struct SchistoSummary *summary);

/**
 * Median and 5-95% band of `metric` in `year` (1-based) of `cell`.
 *
 * # Safety
 * `summary` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_summary_band(const struct SchistoSummary *summary,
                                        size_t cell,
                                        uint32_t year,
                                        enum SchistoMetric metric,
                                        struct SchistoBand *out);

/**
 * The summary as CSV text.
 *
 * # Safety
 * `summary` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_summary_csv(const struct SchistoSummary *summary, char **out);

/**
 * # Safety
 * `summary` must be null or a handle not yet freed.
 */
void schisto_summary_free(struct SchistoSummary *summary);

/**
 * Ecology-only run of `years` years from the configured starting state.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SchistoStatus schisto_steady_state(const struct SchistoConfig *cfg,
                                        uint32_t years,
                                        struct SchistoSteadyState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHISTO_H */
