#ifndef QDETECT_H
#define QDETECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_ARGUMENT = 2,
  QD_STATUS_NUMERICAL_FAULT = 3,
  QD_STATUS_PANIC = 4,
} QdStatus;

/*
 All-to-all model with its measurement window (opaque).
 */
typedef struct QdModel QdModel;

/*
 Result of a Monte Carlo run (opaque).
 */
typedef struct QdSimulation QdSimulation;

typedef struct QdComplex {
  double re;
  double im;
} QdComplex;

/*
 Coefficients of an initial state.
 */
typedef struct QdCoefficients {
  struct QdComplex c_a;
  struct QdComplex c_aperp;
  double a1;
  double a2;
  double a3;
} QdCoefficients;

/*
 Roots of the cubic denominator at rate `r`.
 */
typedef struct QdRoots {
  double r;
  double s1;
  double s2_real;
  double s2_imag;
  double p;
  double q;
  double discriminant;
  /*
   1 if the Routh–Hurwitz inequalities hold.
   */
  int32_t routh_hurwitz;
  /*
   1 if every certificate holds with residual tolerance 1e-9.
   */
  int32_t certified;
} QdRoots;

/*
 Sampler settings. `sharp = 0` draws exponential intervals with `rate`;
 otherwise intervals are exactly `period`. `t_max <= 0` picks the survival
 histogram range from the sample.
 */
typedef struct QdSimulationConfig {
  double rate;
  int32_t sharp;
  double period;
  uint64_t n_trajectories;
  uint64_t seed;
  uint64_t max_measurements;
  size_t bins;
  double t_max;
} QdSimulationConfig;

typedef struct QdSimulationSummary {
  uint64_t n_trajectories;
  uint64_t n_detected;
  uint64_t n_censored;
  /*
   NaN when nothing was detected.
   */
  double mean_fdt;
  double mean_fdt_stderr;
  double detected_fraction;
} QdSimulationSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call into the library on the same thread.
 */
const char *qd_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *qd_version(void);

/*
 Creates an all-to-all model with `n_sites` sites, hopping `coupling` and
 target sites `cut + 1 ..= n_sites`.

 # Safety
 `out_model` must be null or valid for writes.
 */
enum QdStatus qd_model_new(size_t n_sites, size_t cut, double coupling, struct QdModel **out_model);

/*
 Releases a model. Null is ignored.

 # Safety
 `model` must be null or come from `qd_model_new` and not be used again.
 */
void qd_model_free(struct QdModel *model);

/*
 Coefficients of a normalized bright state of `len` amplitudes.

 # Safety
 Pointers must be null or valid; `amplitudes` must hold `len` entries.
 */
enum QdStatus qd_coefficients(const struct QdModel *model,
                              const struct QdComplex *amplitudes,
                              size_t len,
                              struct QdCoefficients *out_coeffs);

/*
 Mean first detection time at rate `r`.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_mfdt(const struct QdModel *model,
                      const struct QdCoefficients *coeffs,
                      double r,
                      double *out_value);

/*
 Rate minimizing the mean first detection time; `+inf` when it decreases
 monotonically.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_optimal_rate(const struct QdModel *model,
                              const struct QdCoefficients *coeffs,
                              double *out_value);

/*
 Laplace transform of the survival probability at `s >= 0`.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_survival_laplace(const struct QdModel *model,
                                  const struct QdCoefficients *coeffs,
                                  double r,
                                  double s,
                                  double *out_value);

/*
 Laplace transform of the first detection density at `s >= 0`.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_first_detection_laplace(const struct QdModel *model,
                                         const struct QdCoefficients *coeffs,
                                         double r,
                                         double s,
                                         double *out_value);

/*
 Roots of the cubic denominator at rate `r`, with their certificates.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_cubic_roots(const struct QdModel *model, double r, struct QdRoots *out_roots);

/*
 Decay timescale `t_m = 1/|s1|` at rate `r`.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_decay_timescale(const struct QdModel *model, double r, double *out_value);

/*
 First detection density at each of `len` times, written to `values`
 (`len` entries).

 # Safety
 `times` and `values` must hold `len` entries; other pointers must be null
 or valid.
 */
enum QdStatus qd_first_detection_density(const struct QdModel *model,
                                         const struct QdCoefficients *coeffs,
                                         double r,
                                         const double *times,
                                         size_t len,
                                         double *values);

/*
 Dimension of the dark subspace.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_dark_dimension(const struct QdModel *model, size_t *out_value);

/*
 Probability that a normalized state is ever detected.

 # Safety
 `amplitudes` must hold `len` entries; other pointers must be null or valid.
 */
enum QdStatus qd_detection_probability(const struct QdModel *model,
                                       const struct QdComplex *amplitudes,
                                       size_t len,
                                       double *out_value);

/*
 Default sampler settings: rate 1, 10⁴ trajectories, seed 0.
 */
struct QdSimulationConfig qd_simulation_config_default(void);

/*
 Runs the Monte Carlo sampler. Results do not depend on the thread count.

 # Safety
 `amplitudes` must hold `len` entries; other pointers must be null or valid.
 */
enum QdStatus qd_simulation_run(const struct QdModel *model,
                                const struct QdComplex *amplitudes,
                                size_t len,
                                const struct QdSimulationConfig *config,
                                struct QdSimulation **out_sim);

/*
 Summary statistics of a run.

 # Safety
 Pointers must be null or valid.
 */
enum QdStatus qd_simulation_summary(const struct QdSimulation *sim,
                                    struct QdSimulationSummary *out_summary);

/*
 Survival estimate at the histogram edges: times, survival and standard
 errors, each of length `*len_out`.

 # Safety
 Buffers must be null or hold `cap` entries; other pointers must be null
 or valid.
 */
enum QdStatus qd_simulation_survival(const struct QdSimulation *sim,
                                     double *times,
                                     double *survival,
                                     double *stderr,
                                     size_t cap,
                                     size_t *len_out);

/*
 Per-trajectory times (detection time, or last measurement if censored)
 and detection flags, in trajectory order.

 # Safety
 Buffers must be null or hold `cap` entries; other pointers must be null
 or valid.
 */
enum QdStatus qd_simulation_records(const struct QdSimulation *sim,
                                    double *times,
                                    uint8_t *detected,
                                    size_t cap,
                                    size_t *len_out);

/*
 Releases a simulation. Null is ignored.

 # Safety
 `sim` must be null or come from `qd_simulation_run` and not be used again.
 */
void qd_simulation_free(struct QdSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDETECT_H */
