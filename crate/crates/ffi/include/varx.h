#ifndef VARX_H
#define VARX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum VarxStatus {
  VARX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VARX_STATUS_NULL_POINTER = 1,
  /**
   * Invalid configuration or arguments.
   */
  VARX_STATUS_CONFIG = 2,
  /**
   * Unreadable or inconsistent input data.
   */
  VARX_STATUS_DATA = 3,
  /**
   * Non-finite values or a degenerate or unstable fit.
   */
  VARX_STATUS_NUMERICAL = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  VARX_STATUS_UTF8 = 5,
  /**
   * The library panicked; this is a bug.
   */
  VARX_STATUS_PANIC = 6,
  /**
   * The requested value is undefined for this data.
   */
  VARX_STATUS_UNDEFINED = 7,
} VarxStatus;

/**
 * Loaded time series.
 */
typedef struct VarxFrame VarxFrame;

/**
 * Result of a full pipeline run.
 */
typedef struct VarxReport VarxReport;

/**
 * Pipeline settings; start from `varx_options_default`.
 */
typedef struct VarxOptions {
  /**
   * Target lag order, at least 1.
   */
  size_t p;
  /**
   * Exogenous lag order.
   */
  size_t s;
  /**
   * Elastic-net mixing weight in [0, 1].
   */
  double alpha;
  double lambda_min;
  double lambda_max;
  size_t lambda_count;
  /**
   * Nonzero for log spacing, zero for linear.
   */
  uint8_t lambda_log;
  /**
   * Band half-width in units of the validation RMSE.
   */
  double ci_multiplier;
  /**
   * Nonzero to scale regressors before fitting.
   */
  uint8_t standardize;
  /**
   * Nonzero for positional lags instead of calendar offsets.
   */
  uint8_t positional_lags;
  /**
   * 0 fits once on the training segment; m > 0 refits every m validation steps.
   */
  size_t refit_every;
  /**
   * 0 all rows, 1 growing season, 2 dormant season.
   */
  uint8_t season;
} VarxOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *varx_last_error_message(void);

struct VarxOptions varx_options_default(void);

/**
 * Load a CSV file. `targets` is a comma-separated list of target columns;
 * every other column becomes an exogenous predictor.
 */
enum VarxStatus varx_frame_load_csv(const char *path,
                                    const char *date_column,
                                    const char *targets,
                                    struct VarxFrame **out);

/**
 * Build a daily frame from arrays. `dates` holds `n` dates as `YYYYMMDD`
 * integers, `target` `n` values, and `exog` `n × m` values in row-major
 * order (may be null when `m` is 0). Columns are named `y1` and `x1..xm`.
 */
enum VarxStatus varx_frame_from_series(size_t n,
                                       const int32_t *dates,
                                       const double *target,
                                       size_t m,
                                       const double *exog,
                                       struct VarxFrame **out);

/**
 * Number of rows, or 0 for a null handle.
 */
size_t varx_frame_len(const struct VarxFrame *frame);

void varx_frame_free(struct VarxFrame *frame);

/**
 * Split, select lambda, fit, forecast the test segment and score it.
 */
enum VarxStatus varx_pipeline_run(const struct VarxFrame *frame,
                                  const struct VarxOptions *options,
                                  struct VarxReport **out);

void varx_report_free(struct VarxReport *report);

/**
 * Test-segment metric for the first target, by name (e.g. "NSE").
 */
enum VarxStatus varx_report_metric(const struct VarxReport *report, const char *name, double *out);

/**
 * Selected penalty weight.
 */
enum VarxStatus varx_report_lambda_star(const struct VarxReport *report, double *out);

/**
 * Number of forecast rows for the first target, or 0 for a null handle.
 */
size_t varx_report_forecast_len(const struct VarxReport *report);

/**
 * Copy forecast columns for the first target into caller buffers of
 * length `len`, which must equal `varx_report_forecast_len`. Any output
 * pointer may be null to skip that column.
 */
enum VarxStatus varx_report_forecast_copy(const struct VarxReport *report,
                                          double *observed,
                                          double *predicted,
                                          double *lower,
                                          double *upper,
                                          size_t len);

/**
 * Fitted model as JSON; release with `varx_string_free`.
 */
enum VarxStatus varx_report_model_json(const struct VarxReport *report, char **out);

void varx_string_free(char *s);

/**
 * Number of goodness-of-fit metrics reported by `varx_metrics_compute`.
 */
size_t varx_metric_count(void);

/**
 * Static name of metric `index`, or null when out of range.
 */
const char *varx_metric_name(size_t index);

/**
 * Every metric for `n` observed/simulated pairs into `values`, which must
 * hold `varx_metric_count()` entries. Undefined metrics are written as NaN.
 */
enum VarxStatus varx_metrics_compute(const double *observed,
                                     const double *simulated,
                                     size_t n,
                                     size_t n_predictors,
                                     double *values);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VARX_H */
