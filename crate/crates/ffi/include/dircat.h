#ifndef DIRCAT_H
#define DIRCAT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DircatStatus {
  DIRCAT_STATUS_OK = 0,
  DIRCAT_STATUS_NULL_POINTER = 1,
  DIRCAT_STATUS_INVALID_ARGUMENT = 2,
  DIRCAT_STATUS_OUT_OF_BOUNDS = 3,
  DIRCAT_STATUS_EMPTY_DATA = 4,
  DIRCAT_STATUS_NUMERICAL = 5,
  DIRCAT_STATUS_BUFFER_TOO_SMALL = 6,
  DIRCAT_STATUS_PANIC = 7,
} DircatStatus;

/**
 * Posterior over bin proportions for one group.
 */
typedef struct DircatPosterior DircatPosterior;

/**
 * One Monte Carlo summary: mean, its standard error and a central interval.
 */
typedef struct DircatMetric {
  double estimate;
  double std_error;
  double ci_lo;
  double ci_hi;
} DircatMetric;

typedef struct DircatComparison {
  struct DircatMetric chance_to_beat;
  struct DircatMetric expected_loss_e;
  struct DircatMetric expected_loss_c;
  struct DircatMetric mean_diff;
} DircatComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *dircat_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dircat_version(void);

/**
 * Bins `data` into `bins` equal-width bins on `[lower, upper]` and applies a
 * uniform `1/bins` prior. Out-of-range values are an error unless `clamp`.
 *
 * # Safety
 * `data` must be valid for `len` reads and `out` valid for one write.
 */
enum DircatStatus dircat_posterior_from_data(const double *data,
                                             size_t len,
                                             size_t bins,
                                             double lower,
                                             double upper,
                                             bool clamp,
                                             struct DircatPosterior **out);

/**
 * # Safety
 * `post` must come from [`dircat_posterior_from_data`] and not be used
 * afterwards. Null is ignored.
 */
void dircat_posterior_free(struct DircatPosterior *post);

/**
 * Number of bins, or 0 for a null handle.
 *
 * # Safety
 * `post` must be null or a live handle.
 */
size_t dircat_posterior_num_bins(const struct DircatPosterior *post);

/**
 * Copies the posterior concentration vector into `dst`.
 *
 * # Safety
 * `post` must be a live handle and `dst` valid for `len` writes.
 */
enum DircatStatus dircat_posterior_alpha(const struct DircatPosterior *post,
                                         double *dst,
                                         size_t len);

/**
 * Copies the per-bin representative values into `dst`.
 *
 * # Safety
 * `post` must be a live handle and `dst` valid for `len` writes.
 */
enum DircatStatus dircat_posterior_values(const struct DircatPosterior *post,
                                          double *dst,
                                          size_t len);

/**
 * Chance to beat, expected losses and mean difference of experiment over
 * control from `draws` joint posterior draws.
 *
 * # Safety
 * Both handles must be live and `out` valid for one write.
 */
enum DircatStatus dircat_compare(const struct DircatPosterior *experiment,
                                 const struct DircatPosterior *control,
                                 size_t draws,
                                 uint64_t seed,
                                 double gamma,
                                 struct DircatComparison *out);

/**
 * Posterior mean and pointwise interval of `Q_E(tau) - Q_C(tau)` for each
 * of the `n_taus` increasing levels. Each output array holds `n_taus` values.
 *
 * # Safety
 * Both handles must be live, `taus` valid for `n_taus` reads and each output
 * valid for `n_taus` writes.
 */
enum DircatStatus dircat_delta_quantiles(const struct DircatPosterior *experiment,
                                         const struct DircatPosterior *control,
                                         const double *taus,
                                         size_t n_taus,
                                         size_t draws,
                                         uint64_t seed,
                                         double gamma,
                                         double *mean_out,
                                         double *lo_out,
                                         double *hi_out);

/**
 * Normal approximation to the mean difference of two raw samples, with its
 * chance to beat.
 *
 * # Safety
 * Each sample pointer must be valid for its length; outputs valid for one
 * write each.
 */
enum DircatStatus dircat_normal_fit(const double *experiment,
                                    size_t n_experiment,
                                    const double *control,
                                    size_t n_control,
                                    double *mu,
                                    double *sigma,
                                    double *chance_to_beat);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRCAT_H */
