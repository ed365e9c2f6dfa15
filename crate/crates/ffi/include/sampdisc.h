#ifndef SAMPDISC_H
#define SAMPDISC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_INVALID_SPECTRUM = 3,
  SD_STATUS_UNSUPPORTED_DOMAIN = 4,
  SD_STATUS_INVALID_SAMPLE = 5,
  SD_STATUS_INVALID_EXPONENT = 6,
  SD_STATUS_DEGENERATE_SPACE = 7,
  SD_STATUS_MISSING_SEED = 8,
  SD_STATUS_ORACLE_TOO_LARGE = 9,
  SD_STATUS_HYPOTHESIS_VIOLATED = 10,
  SD_STATUS_BUDGET_EXHAUSTED = 11,
  SD_STATUS_REFUSED = 12,
  SD_STATUS_UNBOUNDED = 13,
  SD_STATUS_CONFIG_ERROR = 14,
  SD_STATUS_UNSUPPORTED = 15,
  SD_STATUS_IO_ERROR = 16,
  SD_STATUS_PANIC = 99,
} SdStatus;

typedef enum SdMethod {
  SD_METHOD_EXACT_EIGEN = 0,
  SD_METHOD_EXACT_QUADRATURE = 1,
  SD_METHOD_OPTIMIZATION_BOUND = 2,
  SD_METHOD_BRUTE_FORCE = 3,
} SdMethod;

typedef enum SdCertStatus {
  SD_CERT_STATUS_CERTIFIED = 0,
  SD_CERT_STATUS_HEURISTIC_UPPER_C1 = 1,
  SD_CERT_STATUS_HEURISTIC = 2,
} SdCertStatus;

/*
 Opaque point-set handle.
 */
typedef struct SdPoints SdPoints;

/*
 Opaque subspace handle.
 */
typedef struct SdSpace SdSpace;

/*
 Discretization certificate in power form; `p` is `INFINITY` for the sup norm.
 */
typedef struct SdCertificate {
  double p;
  double c1;
  double c2;
  enum SdMethod method;
  enum SdCertStatus status;
  double tolerance;
  size_t m;
  size_t n;
  /*
   Sum of the weights, or 0 for equal weights `1/m`.
   */
  double weight_sum;
} SdCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *sd_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/*
 Trigonometric space on `T^dimension` spanned by `e^{i k·x}` for the
 `count` frequency vectors stored row by row in `freqs` (`count * dimension` entries).
 */
enum SdStatus sd_space_trig(size_t dimension,
                            const int64_t *freqs,
                            size_t count,
                            struct SdSpace **out);

/*
 All frequencies with `max_t |k_t| <= degree` on `T^dimension`.
 */
enum SdStatus sd_space_trig_degree(size_t dimension, int64_t degree, struct SdSpace **out);

/*
 Lacunary space `T(Λ_n)` with ratio `ratio > 1`.
 */
enum SdStatus sd_space_lacunary(size_t n, double ratio, struct SdSpace **out);

/*
 Tensor product of `count >= 2` factor spaces; the factors remain owned by the caller.
 */
enum SdStatus sd_space_tensor(const struct SdSpace *const *factors,
                              size_t count,
                              struct SdSpace **out);

/*
 Space from its JSON description.
 */
enum SdStatus sd_space_from_json(const char *json, struct SdSpace **out);

/*
 Dimension `N` of the space, or 0 for a null handle.
 */
size_t sd_space_dim(const struct SdSpace *space);

void sd_space_free(struct SdSpace *space);

/*
 Equispaced grid `2πj/m` in each of `dimension` coordinates (`m^dimension` points).
 */
enum SdStatus sd_points_equispaced(size_t dimension, size_t m, struct SdPoints **out);

/*
 `m` iid points from the measure of the space's domain, drawn from stream `stream` of `seed`.
 */
enum SdStatus sd_points_iid(const struct SdSpace *space,
                            size_t m,
                            uint64_t seed,
                            uint64_t stream,
                            struct SdPoints **out);

/*
 Points given row by row (`m * dimension` coordinates).
 */
enum SdStatus sd_points_explicit(size_t dimension,
                                 const double *coords,
                                 size_t m,
                                 struct SdPoints **out);

size_t sd_points_len(const struct SdPoints *points);

size_t sd_points_dimension(const struct SdPoints *points);

/*
 Copies the coordinates row by row into `buf`, which must hold `len * dimension` values.
 */
enum SdStatus sd_points_coords(const struct SdPoints *points, double *buf, size_t capacity);

void sd_points_free(struct SdPoints *points);

/*
 Certifies `points` for the `L_p` norm on `space`. `weights` may be null
 (equal weights `1/m`); otherwise it holds one positive weight per point.
 `seed` drives the optimizer restarts used for general `p`.
 */
enum SdStatus sd_certify(const struct SdSpace *space,
                         const struct SdPoints *points,
                         const double *weights,
                         double p,
                         uint64_t seed,
                         struct SdCertificate *out);

/*
 Exhaustive-search certificate for spaces with `N <= 3`.
 */
enum SdStatus sd_brute_force(const struct SdSpace *space,
                             const struct SdPoints *points,
                             double p,
                             size_t resolution,
                             struct SdCertificate *out);

/*
 Nikol'skii constant `M = sup ‖f‖_∞ / ‖f‖_q` and `B = M N^{-1/q}`.
 */
enum SdStatus sd_nikolskii(const struct SdSpace *space, double q, double *out_m, double *out_b);

/*
 Recovery constant `2 C_1^{-1} C_2^{1/p} + 1` for a certified certificate.
 */
enum SdStatus sd_recovery_bound(const struct SdCertificate *cert,
                                const double *weights,
                                size_t m,
                                double p,
                                double *out);

/*
 Weighted least-`p`-th-power recovery. `values` holds `2m` numbers
 (real and imaginary part per point), `weights` may be null for `1/m`,
 and `coeffs` receives `2N` numbers in the same layout.
 */
enum SdStatus sd_recover(const struct SdSpace *space,
                         const struct SdPoints *points,
                         const double *values,
                         const double *weights,
                         double p,
                         double *coeffs,
                         double *out_residual);

/*
 Runs an experiment from its JSON configuration. On success `*out_report`
 receives the report as JSON, to be released with [`sd_string_free`].
 */
enum SdStatus sd_run_experiment(const char *config_json, char **out_report);

void sd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAMPDISC_H */
