/* Copyright 2026 The sslab Authors */
/* SPDX-License-Identifier: Apache-2.0 */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sslab.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      const char *e = sslab_last_error();                             \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,          \
              e ? e : "no message");                                  \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  SslabModel *m = NULL;
  CHECK(sslab_model_iii_new(4, 1, 0.3, 0.2, 1.0, &m) == SSLAB_STATUS_OK);

  size_t d = 0;
  CHECK(sslab_model_hilbert_dim(m, &d) == SSLAB_STATUS_OK && d == 16);

  SslabSymmetry sym;
  CHECK(sslab_model_symmetry(m, &sym) == SSLAB_STATUS_OK);
  CHECK(sym == SSLAB_SYMMETRY_STRONG);

  /* The identity on the two-particle sector is stationary. */
  double re[256] = {0}, im[256] = {0}, ore[256], oim[256];
  for (size_t i = 0; i < d; i++) {
    if (__builtin_popcount((unsigned)i) == 2) re[i * d + i] = 1.0;
  }
  CHECK(sslab_model_apply(m, re, im, ore, oim, d * d) == SSLAB_STATUS_OK);
  for (size_t i = 0; i < d * d; i++) CHECK(fabs(ore[i]) < 1e-12 && fabs(oim[i]) < 1e-12);

  SslabSector sector = {SSLAB_SECTOR_KIND_PAIR, 2, 2};
  double ev_re[3], ev_im[3], gap = 0.0;
  size_t len = 0;
  CHECK(sslab_model_sector_spectrum(m, sector, 3, ev_re, ev_im, &len, &gap) == SSLAB_STATUS_OK);
  CHECK(len == 3 && fabs(ev_re[0]) < 1e-10 && gap > 0.0);
  sslab_model_free(m);

  /* Failures carry a status and a message. */
  CHECK(sslab_model_iii_new(4, 1, 0.3, 0.2, 1.0, NULL) == SSLAB_STATUS_NULL_POINTER);
  CHECK(sslab_last_error() != NULL && strstr(sslab_last_error(), "out") != NULL);

  SslabResult *r = NULL;
  const char *cfg =
      "experiment: perturbation-check\nmodel: I\ncluster: single-site\nGamma: 1\n";
  CHECK(sslab_run_config(cfg, NULL, &r) == SSLAB_STATUS_OK);
  double err = 1.0;
  CHECK(sslab_result_summary(r, "biorthonormality_error", &err) == SSLAB_STATUS_OK);
  CHECK(err < 1e-12);
  CHECK(strstr(sslab_result_json(r), "\"experiment\"") != NULL);
  sslab_result_free(r);

  printf("sslab %s C client ok\n", sslab_version());
  return 0;
}
