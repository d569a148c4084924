#ifndef MWFI_H
#define MWFI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum {
  MWFI_STATUS_OK = 0,
  MWFI_STATUS_NULL_POINTER = 1,
  MWFI_STATUS_INVALID_PARAMETER = 2,
  MWFI_STATUS_CALIBRATION = 3,
  MWFI_STATUS_NO_SIGNAL = 4,
  MWFI_STATUS_OUTSIDE_LUT = 5,
  MWFI_STATUS_BUFFER_TOO_SMALL = 6,
  MWFI_STATUS_PARSE = 7,
  MWFI_STATUS_INTERNAL = 8,
} MwfiStatus;

/**
 * Signal class reported by [`mwfi_classify`].
 */
typedef enum {
  MWFI_LABEL_UNKNOWN = 0,
  MWFI_LABEL_SINGLE_FREQUENCY = 1,
  MWFI_LABEL_MULTIPLE_FREQUENCY = 2,
  MWFI_LABEL_CHIRPED = 3,
  MWFI_LABEL_FREQUENCY_HOPPING = 4,
} MwfiLabel;

/**
 * Delay-to-frequency lookup of the scanning path.
 */
typedef struct MwfiCalibration MwfiCalibration;

/**
 * Power-to-frequency lookup of the discriminator path.
 */
typedef struct MwfiLut MwfiLut;

/**
 * Photonic link parameters.
 */
typedef struct MwfiModels MwfiModels;

/**
 * Set of RF emitters.
 */
typedef struct MwfiScenario MwfiScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length, or 0
 * when the last call succeeded.
 */
size_t mwfi_last_error_message(char *buf, size_t len);

/**
 * Default link models with detector noise.
 */
MwfiModels *mwfi_models_new(void);

void mwfi_models_free(MwfiModels *models);

/**
 * Sets the detector noise (fraction of full scale) and seed.
 */
MwfiStatus mwfi_models_set_noise(MwfiModels *models, double sigma, uint64_t seed);

/**
 * Enables the band-stop filter at `center_hz`, or disables it when
 * `center_hz` is 0.
 */
MwfiStatus mwfi_models_set_notch(MwfiModels *models, double center_hz);

/**
 * Empty scenario.
 */
MwfiScenario *mwfi_scenario_new(void);

void mwfi_scenario_free(MwfiScenario *scenario);

MwfiStatus mwfi_scenario_add_tone(MwfiScenario *scenario, double freq_hz, double amplitude);

/**
 * Adds a rising linear chirp.
 */
MwfiStatus mwfi_scenario_add_chirp(MwfiScenario *scenario,
                                   double center_hz,
                                   double span_hz,
                                   double pulse_width_s,
                                   double repeat_interval_s,
                                   double amplitude);

/**
 * Adds a repeating hop sequence over `freqs_hz[..n_freqs]`.
 */
MwfiStatus mwfi_scenario_add_hop(MwfiScenario *scenario,
                                 const double *freqs_hz,
                                 size_t n_freqs,
                                 double dwell_s,
                                 double amplitude);

/**
 * Calibrates the scanning path with the default drive and 10-20 GHz
 * tones. Detector noise is disabled during calibration.
 */
MwfiStatus mwfi_calibrate(const MwfiModels *models, MwfiCalibration **out);

void mwfi_calibration_free(MwfiCalibration *calibration);

/**
 * Writes `a`, `b`, `c` of `f = a t² + b t + c` to `out[0..3]`.
 */
MwfiStatus mwfi_calibration_coefficients(const MwfiCalibration *calibration, double *out);

/**
 * Frequency at period delay `t_s`.
 */
MwfiStatus mwfi_calibration_eval(const MwfiCalibration *calibration, double t_s, double *out_hz);

/**
 * Scans one period and writes the in-band frequency estimates, in delay
 * order, to `out[..capacity]`.
 */
MwfiStatus mwfi_measure_tones(const MwfiModels *models,
                              const MwfiScenario *scenario,
                              const MwfiCalibration *calibration,
                              double *out,
                              size_t capacity,
                              size_t *out_len);

/**
 * Scans one period and labels the signal type.
 */
MwfiStatus mwfi_classify(const MwfiModels *models,
                         const MwfiScenario *scenario,
                         MwfiLabel *out_label);

/**
 * Single-port lookup over 10-20 GHz with `n_knots` samples.
 */
MwfiStatus mwfi_lut_new(const MwfiModels *models,
                        uint8_t port_number,
                        size_t n_knots,
                        MwfiLut **out);

void mwfi_lut_free(MwfiLut *lut);

/**
 * Normalized port level at `freq_hz`.
 */
MwfiStatus mwfi_lut_eval(const MwfiLut *lut, double freq_hz, double *out_level);

/**
 * Frequency whose normalized level is `level`.
 */
MwfiStatus mwfi_lut_invert(const MwfiLut *lut, double level, double *out_hz);

/**
 * Simulates the discriminator port the lookup was built for and writes
 * one frequency per sample to `out[..capacity]`. NOISE samples are NaN.
 */
MwfiStatus mwfi_ifm_extract(const MwfiModels *models,
                            const MwfiScenario *scenario,
                            const MwfiLut *lut,
                            double sample_rate_hz,
                            double duration_s,
                            double *out,
                            size_t capacity,
                            size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MWFI_H */
