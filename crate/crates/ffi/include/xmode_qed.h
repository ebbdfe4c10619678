#ifndef XMODE_QED_H
#define XMODE_QED_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum XqStatus {
  XQ_STATUS_OK = 0,
  XQ_STATUS_NULL_POINTER = 1,
  XQ_STATUS_INVALID_INPUT = 2,
  XQ_STATUS_SINGULAR_INPUT = 3,
  XQ_STATUS_NO_SOLUTION = 4,
  XQ_STATUS_NUMERICAL = 5,
  XQ_STATUS_INSUFFICIENT_DATA = 6,
  XQ_STATUS_FIT_FAILURE = 7,
  XQ_STATUS_BUFFER_TOO_SMALL = 8,
  XQ_STATUS_PANIC = 9,
} XqStatus;

typedef enum XqSymmetry {
  XQ_SYMMETRY_S_XY = 0,
  XQ_SYMMETRY_AX = 1,
  XQ_SYMMETRY_AY = 2,
  XQ_SYMMETRY_HYBRID = 3,
} XqSymmetry;

/**
 * Opaque lumped-element network.
 */
typedef struct XqNetwork XqNetwork;

/**
 * Opaque NV ground-state model.
 */
typedef struct XqNvModel XqNvModel;

/**
 * Opaque sweep result.
 */
typedef struct XqSweep XqSweep;

/**
 * One eigenmode of the network.
 */
typedef struct XqMode {
  double frequency_ghz;
  enum XqSymmetry symmetry;
  /**
   * Wing potentials (x1, x2, y1, y2), unit norm.
   */
  double potentials[4];
  bool pure_symmetry;
} XqMode;

typedef struct XqQualityFactors {
  double internal;
  double external;
  double total;
} XqQualityFactors;

typedef struct XqLorentzianFit {
  double center_ghz;
  double hwhm_mhz;
  double amplitude;
  double baseline;
  double center_uncertainty_ghz;
  double hwhm_uncertainty_mhz;
  double residual_norm;
  size_t iterations;
} XqLorentzianFit;

typedef struct XqCrossingFit {
  double g_col_mhz;
  double g_col_uncertainty_mhz;
  double cavity_ghz;
  double cavity_uncertainty_ghz;
  double rms_residual_mhz;
  size_t rows_used;
} XqCrossingFit;

/**
 * A readout mode as seen by the transmission model.
 */
typedef struct XqCavityMode {
  double frequency_ghz;
  /**
   * Total HWHM of the power spectrum, MHz.
   */
  double kappa_total_mhz;
  double kappa_c_mhz[4];
  /**
   * Relative port amplitudes, zero where the mode cannot couple.
   */
  double port_amplitudes[4];
  double coupling_scale;
} XqCavityMode;

typedef struct XqSpinEnsemble {
  double collective_coupling_mhz;
  double n_spins;
  double center_ghz;
  double inhomogeneous_hwhm_mhz;
  double homogeneous_hwhm_mhz;
  /**
   * Gaussian inhomogeneous profile instead of Lorentzian.
   */
  bool gaussian;
} XqSpinEnsemble;

typedef struct XqSweepConfig {
  double field_min_mt;
  double field_max_mt;
  size_t field_steps;
  double direction[3];
  double freq_min_ghz;
  double freq_max_ghz;
  size_t freq_steps;
  size_t port_in;
  size_t port_out;
  bool normalize;
} XqSweepConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *xq_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *xq_status_name(enum XqStatus status);

const char *xq_version(void);

/**
 * Network whose wing capacitances put A_x and A_y at the two targets.
 */
enum XqStatus xq_network_calibrated(double ax_ghz,
                                    double ay_ghz,
                                    double wing_inductance_h,
                                    double return_inductance_h,
                                    struct XqNetwork **out);

/**
 * Network from explicit element values; `capacitances_f` holds 4 values.
 */
enum XqStatus xq_network_new(const double *capacitances_f,
                             double wing_inductance_h,
                             double return_inductance_h,
                             struct XqNetwork **out);

void xq_network_free(struct XqNetwork *network);

/**
 * Adds `fraction` × C to the capacitance of `wing` (0..4).
 */
enum XqStatus xq_network_perturb_capacitance(struct XqNetwork *network,
                                             size_t wing,
                                             double fraction);

/**
 * The four modes in ascending frequency; `modes` must hold 4 entries.
 */
enum XqStatus xq_network_modes(const struct XqNetwork *network, struct XqMode *modes);

/**
 * Cross-talk (dB) of the `forbidden` mode between ports `port_a` and `port_b`.
 */
enum XqStatus xq_network_crosstalk_db(const struct XqNetwork *network,
                                      enum XqSymmetry forbidden,
                                      size_t port_a,
                                      size_t port_b,
                                      double *db);

/**
 * Fractional capacitance perturbation of `wing` giving `target_db` of cross-talk.
 */
enum XqStatus xq_network_perturbation_for_crosstalk(const struct XqNetwork *network,
                                                    size_t wing,
                                                    enum XqSymmetry forbidden,
                                                    size_t port_a,
                                                    size_t port_b,
                                                    double target_db,
                                                    double max_fraction,
                                                    double *fraction);

enum XqStatus xq_quality_factors(double frequency_ghz,
                                 double kappa_internal_mhz,
                                 double kappa_external_mhz,
                                 struct XqQualityFactors *out);

/**
 * Fits A·κ²/(κ² + (ω − f0)²) + b to `n` samples of |S|².
 */
enum XqStatus xq_fit_lorentzian(const double *frequencies_ghz,
                                const double *power,
                                size_t n,
                                struct XqLorentzianFit *out);

/**
 * Shift (MHz) between two spectra sampled on their own axes.
 */
enum XqStatus xq_measure_dispersive_shift(const double *reference_ghz,
                                          const double *reference_power,
                                          size_t n_reference,
                                          const double *shifted_ghz,
                                          const double *shifted_power,
                                          size_t n_shifted,
                                          double *chi_mhz,
                                          double *chi_uncertainty_mhz);

/**
 * Collective coupling and cavity frequency from an avoided-crossing sweep.
 */
enum XqStatus xq_fit_avoided_crossing(const struct XqSweep *sweep, struct XqCrossingFit *out);

enum XqStatus xq_nv_model_new(double zero_field_splitting_ghz,
                              double strain_ghz,
                              double gyromagnetic_ratio_ghz_per_t,
                              struct XqNvModel **out);

void xq_nv_model_free(struct XqNvModel *model);

/**
 * Transition frequencies (GHz) of the four orientation classes for a field of
 * `field_t` tesla along `direction` (3 values). Each output holds 4 values.
 */
enum XqStatus xq_nv_transitions(const struct XqNvModel *model,
                                const double *direction,
                                double field_t,
                                double *plus_ghz,
                                double *minus_ghz);

/**
 * Field magnitude (tesla) along `direction` that tunes the m_s = +1
 * (`plus` true) or −1 transition of the best-aligned axis to `target_ghz`.
 */
enum XqStatus xq_nv_resonant_field(const struct XqNvModel *model,
                                   double target_ghz,
                                   const double *direction,
                                   bool plus,
                                   double *field_t);

/**
 * Boltzmann populations (ascending energy, 3 values) of orientation class
 * `axis` at `temperature_k`.
 */
enum XqStatus xq_nv_thermal_populations(const struct XqNvModel *model,
                                        const double *direction,
                                        double field_t,
                                        size_t axis,
                                        double temperature_k,
                                        double *populations);

/**
 * NV count for a concentration (ppm of carbon sites) in a volume (mm³).
 */
enum XqStatus xq_ensemble_size(double concentration_ppm, double volume_mm3, double *n_spins);

/**
 * Complex S(port_out ← port_in) at `probe_ghz`.
 */
enum XqStatus xq_transmission(const struct XqCavityMode *modes,
                              size_t n_modes,
                              const struct XqSpinEnsemble *spins,
                              size_t n_spins,
                              double probe_ghz,
                              size_t port_in,
                              size_t port_out,
                              double *re,
                              double *im);

/**
 * Spin-bath self-energy Σ(ω), MHz.
 */
enum XqStatus xq_spin_susceptibility(const struct XqSpinEnsemble *ensemble,
                                     double probe_ghz,
                                     double *re,
                                     double *im);

/**
 * χ = 2 g² Sz / Δ, MHz.
 */
enum XqStatus xq_dispersive_shift(double g_col_mhz,
                                  double sz,
                                  double detuning_mhz,
                                  double *chi_mhz);

/**
 * Inverse of [`xq_dispersive_shift`].
 */
enum XqStatus xq_extract_g(double chi_mhz, double detuning_mhz, double sz, double *g_col_mhz);

/**
 * g0 = g_col/√N, in the unit of `g_col`.
 */
enum XqStatus xq_single_spin_coupling(double g_col, double n_spins, double *g0);

/**
 * Default grid: 0–25 mT × 200 along [100], 3.10–3.28 GHz × 400, ports 0 → 1.
 */
enum XqStatus xq_sweep_config_default(struct XqSweepConfig *out);

/**
 * Runs a field sweep with the default NV model. The ensemble's
 * `center_ghz` is ignored; spin centers follow the field.
 */
enum XqStatus xq_sweep_run(const struct XqSweepConfig *config,
                           const struct XqCavityMode *modes,
                           size_t n_modes,
                           const struct XqSpinEnsemble *ensemble,
                           bool include_minus_transition,
                           struct XqSweep **out);

void xq_sweep_free(struct XqSweep *sweep);

enum XqStatus xq_sweep_shape(const struct XqSweep *sweep, size_t *n_fields, size_t *n_frequencies);

enum XqStatus xq_sweep_fields(const struct XqSweep *sweep, double *fields_mt, size_t len);

enum XqStatus xq_sweep_frequencies(const struct XqSweep *sweep,
                                   double *frequencies_ghz,
                                   size_t len);

/**
 * Grid values, field-major: entry i·n_frequencies + j is (field i, frequency j).
 */
enum XqStatus xq_sweep_data(const struct XqSweep *sweep, double *re, double *im, size_t len);

/**
 * Hex config hash; owned by the sweep handle.
 */
const char *xq_sweep_config_hash(const struct XqSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XMODE_QED_H */
