#ifndef DECOTIME_H
#define DECOTIME_H

/* C ABI for the decotime measurement-duration toolkit.
 *
 * Conventions:
 *   - fallible calls return a DtStatus and write results through
 *     out-pointers;
 *   - DtScenario / DtTrajectory are opaque handles with explicit _free
 *     functions;
 *   - dt_last_error() returns the last error message on the calling thread,
 *     valid until the next failing call on that thread (do not free);
 *   - strings returned through char ** are released with dt_string_free().
 *
 * Regenerate from the Rust sources with
 *   cargo build -p decotime-ffi --features generate-header
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes mirroring the CLI exit-code contract. */
typedef enum DtStatus {
  DT_OK = 0,
  DT_INVALID_ARGUMENT = 1,
  DT_CONFIG_ERROR = 2,
  DT_NUMERICAL_ERROR = 3,
} DtStatus;

/* Parsed scenario configuration (opaque). */
typedef struct DtScenario DtScenario;

/* Evolved trajectory samples (opaque). */
typedef struct DtTrajectory DtTrajectory;

/* One trajectory sample in the measurement eigenbasis. */
typedef struct DtTrajectoryRow {
  double t;
  double rho11;
  double re_rho12;
  double im_rho12;
  double abs_rho12;
} DtTrajectoryRow;

/* Measurement-time extraction result. */
typedef struct DtMeasurement {
  double t_m;
  double upper_bound;
  double fraction;
  double lambda;
  double eta;
  double residual;
} DtMeasurement;

/* Version string of the underlying library; static storage, do not free. */
const char *dt_version(void);

/* Message of the last error on this thread; valid until the next failing
 * call on the same thread. Do not free. */
const char *dt_last_error(void);

/* t_M = -ln(f) / (2 lambda^2). */
DtStatus dt_upper_bound(double lambda, double fraction, double *out);

/* Parse a `key = value` scenario config. On success writes a handle that
 * must be released with dt_scenario_free. */
DtStatus dt_scenario_parse(const char *text, DtScenario **out);

/* Release a scenario handle; a null pointer is a no-op. */
void dt_scenario_free(DtScenario *scenario);

/* Normalized canonical text of a parsed scenario; free with
 * dt_string_free. */
DtStatus dt_scenario_emit(const DtScenario *scenario, char **out);

/* Evolve the scenario and return an opaque trajectory handle; release with
 * dt_trajectory_free. */
DtStatus dt_trajectory_run(const DtScenario *scenario, DtTrajectory **out);

/* Number of samples in a trajectory; 0 for a null handle. */
size_t dt_trajectory_len(const DtTrajectory *trajectory);

/* Copy sample `index` into `out`. */
DtStatus dt_trajectory_row(const DtTrajectory *trajectory,
                           size_t index,
                           DtTrajectoryRow *out);

/* Static name of the evolution method that produced the trajectory. */
const char *dt_trajectory_method(const DtTrajectory *trajectory);

/* Release a trajectory handle; a null pointer is a no-op. */
void dt_trajectory_free(DtTrajectory *trajectory);

/* Extract the measurement time of the scenario (threshold.f required). */
DtStatus dt_measure(const DtScenario *scenario, DtMeasurement *out);

/* Render a command's output ("trajectory" | "tmeasure" | "sweep") in the
 * given format ("csv" | "json") exactly as the CLI would emit it. Free the
 * string with dt_string_free. */
DtStatus dt_render(const DtScenario *scenario,
                   const char *command,
                   const char *format,
                   char **out);

/* Free a string returned by this library; a null pointer is a no-op. */
void dt_string_free(char *s);

/* Run the built-in consistency checks; returns the number of failures. */
int32_t dt_selftest(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DECOTIME_H */
