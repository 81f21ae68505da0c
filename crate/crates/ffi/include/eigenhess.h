#ifndef EIGENHESS_H
#define EIGENHESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define EH_BC_DIRICHLET 0

#define EH_BC_NEUMANN 1

#define EH_ALPHA_PRINTED 0

#define EH_ALPHA_SQRT 1

// Length of the gradient buffer filled by [`eh_eigenpairs_eval`].
#define EH_GRAD_LEN 4

// Length of the row-major Hessian buffer filled by [`eh_eigenpairs_eval`].
#define EH_HESS_LEN 16

typedef enum EhStatus {
  EH_STATUS_OK = 0,
  EH_STATUS_NULL_POINTER = 1,
  EH_STATUS_INVALID_UTF8 = 2,
  EH_STATUS_OUT_OF_RANGE = 3,
  EH_STATUS_BUFFER_TOO_SMALL = 4,
  EH_STATUS_DOMAIN = 10,
  EH_STATUS_COLLAR = 11,
  EH_STATUS_ARGUMENT = 12,
  EH_STATUS_DEGENERATE = 13,
  EH_STATUS_CAPABILITY = 14,
  EH_STATUS_CHART = 15,
  EH_STATUS_NON_FINITE = 16,
  EH_STATUS_CONFIG = 17,
  EH_STATUS_IO = 18,
  EH_STATUS_PANIC = 99,
} EhStatus;

// Opaque list of eigenpairs.
typedef struct EhEigenpairs EhEigenpairs;

// Opaque geometry model.
typedef struct EhGeometry EhGeometry;

// Opaque bound report.
typedef struct EhReport EhReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message. Returns the size needed including the NUL.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t eh_last_error_message(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *eh_version(void);

// Catalog model by name: interval, square, disk, ball, hemisphere, hemisphere3.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum EhStatus eh_geometry_by_name(const char *name, struct EhGeometry **out);

// Interval `[0, length]`.
//
// # Safety
// `out` must be writable.
enum EhStatus eh_geometry_interval(double length, struct EhGeometry **out);

// Box with the given edge lengths, one to four of them.
//
// # Safety
// `edges` must be valid for `len` doubles; `out` must be writable.
enum EhStatus eh_geometry_box(const double *edges, size_t len, struct EhGeometry **out);

// Disk of the given radius.
//
// # Safety
// `out` must be writable.
enum EhStatus eh_geometry_disk(double radius, struct EhGeometry **out);

// Three-dimensional ball of the given radius.
//
// # Safety
// `out` must be writable.
enum EhStatus eh_geometry_ball(double radius, struct EhGeometry **out);

// Geodesic cap of polar angle `theta` on the unit `n`-sphere.
//
// # Safety
// `out` must be writable.
enum EhStatus eh_geometry_spherical_cap(size_t n, double theta, struct EhGeometry **out);

// Intrinsic dimension and the number of ambient coordinates points use.
//
// # Safety
// `g` must come from an `eh_geometry_*` constructor; outputs must be writable or null.
enum EhStatus eh_geometry_dimension(const struct EhGeometry *g, size_t *dim, size_t *ambient);

// # Safety
// `g` must be null or a handle not yet freed.
void eh_geometry_free(struct EhGeometry *g);

// The first `count` eigenpairs in ascending eigenvalue order.
//
// # Safety
// `g` must be a live geometry handle; `out` must be writable.
enum EhStatus eh_eigenpairs_enumerate(const struct EhGeometry *g,
                                      uint32_t bc,
                                      size_t count,
                                      struct EhEigenpairs **out);

// # Safety
// `p` must be a live eigenpair list; `len` must be writable.
enum EhStatus eh_eigenpairs_len(const struct EhEigenpairs *p, size_t *len);

// # Safety
// `p` must be a live eigenpair list; `lambda` must be writable.
enum EhStatus eh_eigenpairs_lambda(const struct EhEigenpairs *p, size_t i, double *lambda);

// Value, gradient and row-major Hessian of pair `i` at the ambient point `x`.
//
// Unused trailing components are zero. Any output may be null.
//
// # Safety
// `x` must be valid for `len` doubles, `grad` for [`EH_GRAD_LEN`], `hess` for [`EH_HESS_LEN`].
enum EhStatus eh_eigenpairs_eval(const struct EhEigenpairs *p,
                                 size_t i,
                                 const double *x,
                                 size_t len,
                                 double *value,
                                 double *grad,
                                 double *hess);

// Sup norms of the value, gradient and Hessian of pair `i`, written to `out[0..3]`.
//
// # Safety
// Handles must be live and `g` the geometry the pairs came from; `out` valid for 3 doubles.
enum EhStatus eh_eigenpairs_sup_norms(const struct EhEigenpairs *p,
                                      size_t i,
                                      const struct EhGeometry *g,
                                      double *out);

// # Safety
// `p` must be null or a handle not yet freed.
void eh_eigenpairs_free(struct EhEigenpairs *p);

// Dirichlet Hessian constant at eigenvalue `lambda`.
//
// # Safety
// `g` must be a live geometry handle; `out` must be writable.
enum EhStatus eh_bound_dirichlet(const struct EhGeometry *g,
                                 double lambda,
                                 uint32_t variant,
                                 double k_floor,
                                 struct EhReport **out);

// Neumann Hessian constant at eigenvalue `lambda`.
//
// # Safety
// `g` must be a live geometry handle; `out` must be writable.
enum EhStatus eh_bound_neumann(const struct EhGeometry *g, double lambda, struct EhReport **out);

// The constant multiplying `lambda`, and the bound on the Hessian-to-value sup ratio.
//
// # Safety
// `r` must be a live report; outputs must be writable or null.
enum EhStatus eh_report_values(const struct EhReport *r, double *constant, double *ratio_bound);

// The full report as JSON. `needed` receives the size including the NUL even on failure.
//
// # Safety
// `r` must be a live report; `buf` null or valid for `cap` bytes; `needed` null or writable.
enum EhStatus eh_report_json(const struct EhReport *r, char *buf, size_t cap, size_t *needed);

// # Safety
// `r` must be null or a handle not yet freed.
void eh_report_free(struct EhReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIGENHESS_H */
