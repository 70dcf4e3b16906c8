#ifndef SPINCHAIN_H
#define SPINCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of an API call.
 */
typedef enum SpinchainStatus {
  SPINCHAIN_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPINCHAIN_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range, or text was not valid UTF-8.
   */
  SPINCHAIN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Configuration text failed to parse or validate.
   */
  SPINCHAIN_STATUS_CONFIG = 3,
  /**
   * Steady-state or response solve failed.
   */
  SPINCHAIN_STATUS_SOLVER = 4,
  /**
   * The library panicked; the handle involved should be discarded.
   */
  SPINCHAIN_STATUS_PANIC = 5,
} SpinchainStatus;

/**
 * A chain configuration.
 */
typedef struct SpinchainConfig SpinchainConfig;

/**
 * A computed transmission spectrum.
 */
typedef struct SpinchainSpectrum SpinchainSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *spinchain_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spinchain_version(void);

/**
 * Parse configuration text.
 */
enum SpinchainStatus spinchain_config_parse(const char *text, struct SpinchainConfig **out);

/**
 * The bundled single-resonator chain.
 */
enum SpinchainStatus spinchain_config_single(struct SpinchainConfig **out);

/**
 * The bundled two-resonator chain with coupling `j_over_kappa` times the
 * fiber coupling rate.
 */
enum SpinchainStatus spinchain_config_pair(double j_over_kappa, struct SpinchainConfig **out);

void spinchain_config_free(struct SpinchainConfig *config);

/**
 * Number of resonators in the chain.
 */
enum SpinchainStatus spinchain_config_len(const struct SpinchainConfig *config, size_t *out);

/**
 * Set the spin rate (Hz, signed) of resonator `index` (zero-based).
 */
enum SpinchainStatus spinchain_config_set_spin(struct SpinchainConfig *config,
                                               size_t index,
                                               double spin_rate);

/**
 * Serialize the configuration to text. The returned string must be released
 * with [`spinchain_string_free`].
 */
enum SpinchainStatus spinchain_config_to_string(const struct SpinchainConfig *config, char **out);

void spinchain_string_free(char *s);

/**
 * Probe power transmission at detuning `delta_p` (Hz).
 */
enum SpinchainStatus spinchain_transmission(const struct SpinchainConfig *config,
                                            double delta_p,
                                            double *out);

/**
 * Group delay (s) at detuning `delta_p` (Hz).
 */
enum SpinchainStatus spinchain_group_delay(const struct SpinchainConfig *config,
                                           double delta_p,
                                           double *out);

/**
 * Forward and backward transmission and their contrast
 * `(T_fwd − T_bwd)/(T_fwd + T_bwd)`. Any output pointer may be null.
 */
enum SpinchainStatus spinchain_nonreciprocity(const struct SpinchainConfig *config,
                                              double delta_p,
                                              double *forward,
                                              double *backward,
                                              double *contrast);

/**
 * Sweep `points` evenly spaced detunings from `dp_min` to `dp_max` (Hz).
 */
enum SpinchainStatus spinchain_spectrum_compute(const struct SpinchainConfig *config,
                                                double dp_min,
                                                double dp_max,
                                                size_t points,
                                                struct SpinchainSpectrum **out);

void spinchain_spectrum_free(struct SpinchainSpectrum *spectrum);

/**
 * Number of grid points in a spectrum.
 */
enum SpinchainStatus spinchain_spectrum_len(const struct SpinchainSpectrum *spectrum, size_t *out);

/**
 * Copy the spectrum columns into caller buffers of length `len`, which must
 * equal the spectrum length. Any column pointer may be null to skip it.
 */
enum SpinchainStatus spinchain_spectrum_copy(const struct SpinchainSpectrum *spectrum,
                                             size_t len,
                                             double *delta_p,
                                             double *transmission,
                                             double *phase,
                                             double *tau_g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINCHAIN_H */
