#ifndef HYPERMIX_H
#define HYPERMIX_H

#include <stddef.h>
#include <stdint.h>

typedef enum HmStatus {
  HM_STATUS_OK = 0,
  HM_STATUS_NULL_POINTER = 1,
  HM_STATUS_CONTRACT = 2,
  HM_STATUS_DOMAIN = 3,
  HM_STATUS_OUT_OF_BALL = 4,
  HM_STATUS_OFF_SHEET = 5,
  HM_STATUS_PRECISION_LOSS = 6,
  HM_STATUS_INTERNAL = 7,
  HM_STATUS_IO = 8,
  HM_STATUS_PANIC = 9,
} HmStatus;

typedef enum HmMode {
  HM_MODE_EM = 0,
  HM_MODE_GEM = 1,
} HmMode;

// A finished mixture fit.
typedef struct HmFit HmFit;

// Radial normalizer for one dimension.
typedef struct HmModel HmModel;

// Options for [`hm_fit`]; start from [`hm_fit_options_default`].
typedef struct HmFitOptions {
  size_t k;
  enum HmMode mode;
  size_t inner_l;
  double tol;
  size_t max_iter;
  size_t restarts;
  uint64_t seed;
  double beta_lo;
  double beta_hi;
  size_t threads;
} HmFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *hm_last_error(void);

// Geodesic distance between two points.
//
// # Safety
// `x` and `y` must point to `dim + 1` doubles; `out_d` must be writable.
enum HmStatus hm_distance(const double *x, const double *y, size_t dim, double *out_d);

// Exponential map at `mu` of the tangent vector `v` (projected onto `T_mu`).
//
// # Safety
// `mu`, `v` and `out_x` must each hold `dim + 1` doubles.
enum HmStatus hm_exp_map(const double *mu, const double *v, size_t dim, double *out_x);

// Logarithm map `Log_mu(x)` in ambient coordinates.
//
// # Safety
// `mu`, `x` and `out_v` must each hold `dim + 1` doubles.
enum HmStatus hm_log_map(const double *mu, const double *x, size_t dim, double *out_v);

// Hyperboloid point to Poincaré ball coordinates (`dim` values).
//
// # Safety
// `x` must hold `dim + 1` doubles and `out_y` `dim` doubles.
enum HmStatus hm_to_poincare(const double *x, size_t dim, double *out_y);

// Poincaré ball point to hyperboloid coordinates.
//
// # Safety
// `y` must hold `dim` doubles and `out_x` `dim + 1` doubles.
enum HmStatus hm_from_poincare(const double *y, size_t dim, double *out_x);

// Quadrature-backed normalizer.
//
// # Safety
// `out_model` must be writable; free the handle with [`hm_model_free`].
enum HmStatus hm_model_new_quadrature(size_t dim, struct HmModel **out_model);

// Interpolated normalizer on `knots` log-spaced values of `beta` in `[beta_lo, beta_hi]`.
//
// # Safety
// `out_model` must be writable; free the handle with [`hm_model_free`].
enum HmStatus hm_model_new_grid(size_t dim,
                                double beta_lo,
                                double beta_hi,
                                size_t knots,
                                struct HmModel **out_model);

// # Safety
// `model` must come from an `hm_model_new_*` call and not be used afterwards. Null is ignored.
void hm_model_free(struct HmModel *model);

// `log Z_d(beta)`.
//
// # Safety
// `model` must be a live handle; `out_a` must be writable.
enum HmStatus hm_log_normalizer(const struct HmModel *model, double beta, double *out_a);

// Weighted maximum-likelihood location and inverse scale.
//
// # Safety
// `pts` holds `n * (dim + 1)` doubles, `weights` `n`, `out_mu` `dim + 1`; `out_beta` is writable.
enum HmStatus hm_weighted_mle(const struct HmModel *model,
                              const double *pts,
                              const double *weights,
                              size_t n,
                              size_t dim,
                              double beta_lo,
                              double beta_hi,
                              double *out_mu,
                              double *out_beta);

// `n` draws from the Riemannian Gaussian `(mu, beta)`, ChaCha20 seeded by `seed`.
//
// # Safety
// `mu` holds `dim + 1` doubles and `out_pts` `n * (dim + 1)`.
enum HmStatus hm_sample(const double *mu,
                        size_t dim,
                        double beta,
                        size_t n,
                        uint64_t seed,
                        double *out_pts);

// Library defaults for a `k`-component fit.
struct HmFitOptions hm_fit_options_default(size_t k);

// Fits a mixture to `n` points.
//
// # Safety
// `pts` holds `n * (dim + 1)` doubles; `opts` and `out_fit` are valid.
// Free the result with [`hm_fit_free`].
enum HmStatus hm_fit(const struct HmModel *model,
                     const double *pts,
                     size_t n,
                     size_t dim,
                     const struct HmFitOptions *opts,
                     struct HmFit **out_fit);

// # Safety
// `fit` must come from [`hm_fit`] and not be used afterwards. Null is ignored.
void hm_fit_free(struct HmFit *fit);

// Number of components, or 0 for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
size_t hm_fit_k(const struct HmFit *fit);

// Final observed-data log-likelihood, NaN for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
double hm_fit_loglik(const struct HmFit *fit);

// 1 if the outer loop met its tolerance, 0 otherwise.
//
// # Safety
// `fit` must be null or a live handle.
int32_t hm_fit_converged(const struct HmFit *fit);

// Outer iterations run.
//
// # Safety
// `fit` must be null or a live handle.
size_t hm_fit_iterations(const struct HmFit *fit);

// Copies the `k` mixing weights.
//
// # Safety
// `out_w` holds `k` doubles.
enum HmStatus hm_fit_weights(const struct HmFit *fit, double *out_w);

// Copies the `k` locations, `dim + 1` doubles each.
//
// # Safety
// `out_mu` holds `k * (dim + 1)` doubles.
enum HmStatus hm_fit_locations(const struct HmFit *fit, double *out_mu);

// Copies the `k` inverse scales.
//
// # Safety
// `out_beta` holds `k` doubles.
enum HmStatus hm_fit_betas(const struct HmFit *fit, double *out_beta);

// Copies the `n x k` responsibilities, row-major.
//
// # Safety
// `out_r` holds `n * k` doubles.
enum HmStatus hm_fit_responsibilities(const struct HmFit *fit, double *out_r);

// AIC, BIC and HQIC of the fit.
//
// # Safety
// All output pointers must be writable.
enum HmStatus hm_fit_criteria(const struct HmFit *fit, double *aic, double *bic, double *hqic);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERMIX_H */
