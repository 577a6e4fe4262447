#ifndef QBKIX_H
#define QBKIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum QbkixStatus {
  QBKIX_STATUS_OK = 0,
  QBKIX_STATUS_NULL_POINTER = 1,
  QBKIX_STATUS_INVALID_ARGUMENT = 2,
  QBKIX_STATUS_CONFIG = 3,
  QBKIX_STATUS_UNSUPPORTED = 4,
  /**
   * GMRES stopped at its iteration limit.
   */
  QBKIX_STATUS_MAX_ITERATIONS = 5,
  QBKIX_STATUS_NUMERIC = 6,
  QBKIX_STATUS_GEOMETRY = 7,
  QBKIX_STATUS_SIZE_GUARD = 8,
  QBKIX_STATUS_BUFFER_TOO_SMALL = 9,
  QBKIX_STATUS_PANIC = 10,
} QbkixStatus;

typedef enum QbkixFamily {
  QBKIX_FAMILY_LAPLACE = 0,
  QBKIX_FAMILY_YUKAWA = 1,
  QBKIX_FAMILY_HELMHOLTZ = 2,
  QBKIX_FAMILY_STOKES = 3,
  QBKIX_FAMILY_NAVIER = 4,
} QbkixFamily;

typedef enum QbkixMode {
  QBKIX_MODE_DIRECT = 0,
  QBKIX_MODE_ONE_SIDED = 1,
  QBKIX_MODE_ONE_SIDED_EXTERIOR = 2,
  QBKIX_MODE_TWO_SIDED = 3,
} QbkixMode;

/**
 * Opaque closed boundary curve.
 */
typedef struct QbkixCurve QbkixCurve;

/**
 * Opaque solved density with its mesh.
 */
typedef struct QbkixSolution QbkixSolution;

/**
 * A kernel family with its parameter: `lambda` for Yukawa, `omega` for
 * Helmholtz, Poisson ratio `nu` for Navier; ignored otherwise.
 */
typedef struct QbkixKernel {
  enum QbkixFamily family;
  double parameter;
} QbkixKernel;

/**
 * Boundary data callback: writes the `cdim` values at `(x, y)` to `out`.
 * It may be called from several threads at once.
 */
typedef void (*QbkixBoundaryFn)(double x, double y, double *out, void *user);

/**
 * Recommended expansion parameters.
 */
typedef struct QbkixParameters {
  double delta_over_l;
  size_t k;
  double r_ratio;
  double theta;
  size_t beta;
} QbkixParameters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *qbkix_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qbkix_version(void);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum QbkixStatus qbkix_curve_circle(double r, struct QbkixCurve **out);

/**
 * `X(t) = (r0 + amp cos(freq t)) (cos t, sin t)`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum QbkixStatus qbkix_curve_star(double r0, double amp, uint32_t freq, struct QbkixCurve **out);

/**
 * Axis-aligned square centred at the origin.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum QbkixStatus qbkix_curve_square(double side, struct QbkixCurve **out);

/**
 * # Safety
 * `curve` must come from a `qbkix_curve_*` constructor and not be freed
 * twice. Null is ignored.
 */
void qbkix_curve_free(struct QbkixCurve *curve);

/**
 * Point on the curve at parameter `t`.
 *
 * # Safety
 * `curve` must be a live handle; `xy` must hold two doubles.
 */
enum QbkixStatus qbkix_curve_position(const struct QbkixCurve *curve, double t, double *xy);

/**
 * Interior Dirichlet solve on a uniform mesh of `panels` panels with
 * 16 nodes each. On [`QbkixStatus::MaxIterations`] no handle is returned.
 *
 * # Safety
 * `curve` must be a live handle, `data` a thread-safe callback writing
 * `cdim` doubles, and `out` valid for a pointer write.
 */
enum QbkixStatus qbkix_solve_dirichlet(const struct QbkixCurve *curve,
                                       struct QbkixKernel kernel,
                                       enum QbkixMode mode,
                                       size_t panels,
                                       double tol,
                                       size_t max_iter,
                                       QbkixBoundaryFn data,
                                       void *user,
                                       struct QbkixSolution **out);

/**
 * # Safety
 * `sol` must come from [`qbkix_solve_dirichlet`] and not be freed twice.
 * Null is ignored.
 */
void qbkix_solution_free(struct QbkixSolution *sol);

/**
 * Number of density values (`nodes * cdim`), or 0 for a null handle.
 *
 * # Safety
 * `sol` must be a live handle or null.
 */
size_t qbkix_solution_len(const struct QbkixSolution *sol);

/**
 * GMRES iterations of the solve, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be a live handle or null.
 */
size_t qbkix_solution_iterations(const struct QbkixSolution *sol);

/**
 * Copies the density into `buf` of length `len`.
 *
 * # Safety
 * `sol` must be a live handle and `buf` valid for `len` writes.
 */
enum QbkixStatus qbkix_solution_density(const struct QbkixSolution *sol, double *buf, size_t len);

/**
 * Evaluates the solution at `n` points `(xs[i], ys[i])`, writing `n * cdim`
 * values to `out`. Points near the boundary use QBKIX.
 *
 * # Safety
 * `sol` must be a live handle; `xs`, `ys` valid for `n` reads; `out` valid
 * for `n * cdim` writes.
 */
enum QbkixStatus qbkix_solution_evaluate(const struct QbkixSolution *sol,
                                         const double *xs,
                                         const double *ys,
                                         size_t n,
                                         double *out);

/**
 * Expansion parameters for target accuracy `eps` with `q`-node panels.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum QbkixStatus qbkix_recommend_parameters(double eps, size_t q, struct QbkixParameters *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QBKIX_H */
