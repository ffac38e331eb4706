#ifndef THINFIBER_H
#define THINFIBER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_INPUT = 2,
  TF_STATUS_NUMERICAL = 3,
  TF_STATUS_BUFFER_TOO_SMALL = 4,
  TF_STATUS_PANIC = 5,
} TfStatus;

typedef enum TfGcClass {
  TF_GC_CLASS_DIRICHLET_GENERIC = 0,
  TF_GC_CLASS_MIXED_NEUMANN_LEFT = 1,
  TF_GC_CLASS_MIXED_NEUMANN_RIGHT = 2,
  TF_GC_CLASS_GENERALIZED_KIRCHHOFF = 3,
} TfGcClass;

/**
 * Metric graph with vertex conditions.
 */
typedef struct TfGraph TfGraph;

/**
 * Two-dimensional junction domain.
 */
typedef struct TfJunction TfJunction;

/**
 * Piecewise-constant potential on [−1, 1].
 */
typedef struct TfPotential TfPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message of this thread, without the NUL.
 */
uintptr_t tf_last_error_length(void);

/**
 * Copies the last error message, NUL-terminated, into `buf`.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes.
 */
enum TfStatus tf_last_error_message(char *buf, uintptr_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tf_version(void);

/**
 * Parses a graph description (JSON, schema 1).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_graph_from_json(const char *json, struct TfGraph **out);

/**
 * # Safety
 * `g` must come from `tf_graph_from_json` and not be used afterwards.
 */
void tf_graph_free(struct TfGraph *g);

/**
 * Number of infinite edges, the dimension of the scattering matrix.
 *
 * # Safety
 * `g` must be a live handle.
 */
enum TfStatus tf_graph_lead_count(const struct TfGraph *g, uintptr_t *out);

/**
 * Scattering matrix T(μ) on the infinite edges. `eps` is the thinness
 * parameter passed to λ-dependent vertex conditions.
 *
 * # Safety
 * `g` must be a live handle; `out` must hold `cap` doubles.
 */
enum TfStatus tf_graph_scattering_matrix(const struct TfGraph *g,
                                         double mu_re,
                                         double mu_im,
                                         double eps,
                                         double *out,
                                         uintptr_t cap,
                                         uintptr_t *dim);

/**
 * Eigenvalues in the disk |μ| < radius of a compact graph. Writes up to
 * `cap` values (interleaved into `mu`, 2·cap doubles) with multiplicities;
 * `count` receives the number found even when `cap` is too small.
 *
 * # Safety
 * `g` must be a live handle; `mu` must hold 2·cap doubles and `mult` cap entries.
 */
enum TfStatus tf_graph_eigenvalues(const struct TfGraph *g,
                                   double radius,
                                   double eps,
                                   double *mu,
                                   uintptr_t *mult,
                                   uintptr_t cap,
                                   uintptr_t *count);

/**
 * Potential with `n` equal steps of the given values on [−1, 1].
 *
 * # Safety
 * `values` must hold `n` doubles and `out` be a valid pointer.
 */
enum TfStatus tf_potential_new(const double *values, uintptr_t n, struct TfPotential **out);

/**
 * # Safety
 * `p` must come from `tf_potential_new` and not be used afterwards.
 */
void tf_potential_free(struct TfPotential *p);

/**
 * 2×2 scattering matrix of −d² + ε⁻²v(t/ε) at energy λ; `out` holds 8 doubles.
 *
 * # Safety
 * `p` must be a live handle and `out` hold 8 doubles.
 */
enum TfStatus tf_potential_scattering(const struct TfPotential *p,
                                      double eps,
                                      double lambda,
                                      double *out);

/**
 * Class of the ε → 0 gluing condition. For the generalized Kirchhoff class
 * the weights are written to `rho_minus`/`rho_plus`; otherwise both are 0.
 *
 * # Safety
 * `p` must be a live handle; the output pointers must be valid.
 */
enum TfStatus tf_potential_classify(const struct TfPotential *p,
                                    enum TfGcClass *class_,
                                    double *rho_minus,
                                    double *rho_plus);

/**
 * Parses a junction domain (JSON).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_junction_from_json(const char *json, struct TfJunction **out);

/**
 * # Safety
 * `d` must come from `tf_junction_from_json` and not be used afterwards.
 */
void tf_junction_free(struct TfJunction *d);

/**
 * Finite-difference scattering matrix of the junction at λ in the
 * single-mode window.
 *
 * # Safety
 * `d` must be a live handle; `out` must hold `cap` doubles.
 */
enum TfStatus tf_junction_scattering(const struct TfJunction *d,
                                     double lambda,
                                     double h,
                                     uintptr_t n_evanescent,
                                     double *out,
                                     uintptr_t cap,
                                     uintptr_t *dim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THINFIBER_H */
