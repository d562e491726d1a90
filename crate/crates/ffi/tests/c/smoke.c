#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "hypermix.h"

#define CHECK(expr)                                                     \
  do {                                                                  \
    HmStatus s_ = (expr);                                               \
    if (s_ != HM_STATUS_OK) {                                           \
      fprintf(stderr, "%s failed (%d): %s\n", #expr, s_, hm_last_error()); \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  const size_t dim = 2, n = 400;
  double mu[3] = {0.0, 0.0, 1.0};
  double *pts = malloc(sizeof(double) * n * (dim + 1));
  CHECK(hm_sample(mu, dim, 2.0, n, 7, pts));

  HmModel *model = NULL;
  CHECK(hm_model_new_grid(dim, 1e-3, 50.0, 256, &model));

  HmFitOptions opts = hm_fit_options_default(2);
  opts.seed = 11;
  HmFit *fit = NULL;
  CHECK(hm_fit(model, pts, n, dim, &opts, &fit));
  if (hm_fit_k(fit) != 2 || !isfinite(hm_fit_loglik(fit))) return 1;

  double w[2];
  CHECK(hm_fit_weights(fit, w));
  if (fabs(w[0] + w[1] - 1.0) > 1e-12) return 1;

  double y[2] = {0.5, 0.9};
  double x[3];
  if (hm_from_poincare(y, dim, x) != HM_STATUS_OUT_OF_BALL) return 1;
  if (hm_last_error()[0] == '\0') return 1;

  hm_fit_free(fit);
  hm_model_free(model);
  free(pts);
  printf("ok\n");
  return 0;
}
