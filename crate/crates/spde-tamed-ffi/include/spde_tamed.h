/* C ABI for the spde-tamed solver. Generated by cbindgen; do not edit. */

#ifndef SPDE_TAMED_H
#define SPDE_TAMED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum SpdeStatus {
  /**
   * The call succeeded.
   */
  SPDE_STATUS_OK = 0,
  /**
   * A pointer argument was null or text was not valid UTF-8.
   */
  SPDE_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The configuration could not be parsed, resolved, or satisfied.
   */
  SPDE_STATUS_CONFIG = 2,
  /**
   * A structural check failed; the report is still returned.
   */
  SPDE_STATUS_INVARIANT = 3,
  /**
   * Result encoding failed.
   */
  SPDE_STATUS_IO = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  SPDE_STATUS_INTERNAL = 5,
} SpdeStatus;

/**
 * Opaque handle owning a parsed run configuration.
 */
typedef struct SpdeExperiment SpdeExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 * The pointer is valid for the lifetime of the process; do not free it.
 */
const char *spde_version(void);

/**
 * Returns the message recorded by the most recent failing call on this
 * thread, or an empty string when nothing has failed yet. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *spde_last_error(void);

/**
 * Parses a configuration document and returns a new experiment through
 * `out`. Set `toml` to parse TOML; otherwise the text is read as JSON.
 * On any failure `*out` is null. Release the handle with
 * `spde_experiment_free`.
 *
 * # Safety
 * `config_text` must be a valid NUL-terminated string and `out` must point
 * to writable memory for one pointer.
 */
enum SpdeStatus spde_experiment_new(const char *config_text,
                                    bool toml,
                                    struct SpdeExperiment **out);

/**
 * Releases an experiment handle. Passing null is a no-op.
 *
 * # Safety
 * `exp` must be null or a pointer returned by `spde_experiment_new` that
 * has not been freed yet.
 */
void spde_experiment_free(struct SpdeExperiment *exp);

/**
 * Releases a string returned by this library. Passing null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer produced by one of the `*_json` calls that
 * has not been freed yet.
 */
void spde_string_free(char *s);

/**
 * Writes the experiment's fully resolved configuration (all defaults
 * filled in) through `out` as canonical JSON.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` must point to writable
 * memory for one pointer.
 */
enum SpdeStatus spde_canonical_config_json(const struct SpdeExperiment *exp, char **out);

/**
 * Runs the Monte Carlo exponential-moment estimator and writes the
 * estimate document (same schema as the CLI's `estimate.json`) through
 * `out`. `paths` overrides the configured path count; pass 0 to keep the
 * configured value. Results are a deterministic function of the
 * configuration, `seed`, and `paths`.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` must point to writable
 * memory for one pointer.
 */
enum SpdeStatus spde_estimate_json(const struct SpdeExperiment *exp,
                                   uint64_t seed,
                                   uint64_t paths,
                                   char **out);

/**
 * Runs the structural check battery and writes the report (same schema as
 * the CLI's `verify.json`) through `out`. When at least one check fails
 * the report is still written and the call returns the `Invariant`
 * status, mirroring the CLI's nonzero exit.
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` must point to writable
 * memory for one pointer.
 */
enum SpdeStatus spde_verify_json(const struct SpdeExperiment *exp, uint64_t seed, char **out);

/**
 * Evaluates the closed-form moment bound in nested-log space and writes
 * the table (same schema as the CLI's `bound.json`) through `out`. A
 * positive finite `mesh` evaluates that single mesh; any other value uses
 * the configured sweep meshes (or the partition mesh when none are set).
 *
 * # Safety
 * `exp` must be a live experiment handle and `out` must point to writable
 * memory for one pointer.
 */
enum SpdeStatus spde_bound_json(const struct SpdeExperiment *exp, double mesh, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPDE_TAMED_H */
