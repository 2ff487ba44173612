#ifndef IRNN_H
#define IRNN_H

#include <stdbool.h>
#include <stddef.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum IrnnStatus {
  IRNN_STATUS_OK = 0,
  IRNN_STATUS_NULL_POINTER = 1,
  IRNN_STATUS_INVALID_ARGUMENT = 2,
  IRNN_STATUS_SHAPE_MISMATCH = 3,
  IRNN_STATUS_NUMERIC = 4,
  IRNN_STATUS_CONFIG = 5,
  IRNN_STATUS_DECOMPOSITION = 6,
  IRNN_STATUS_PANIC = 7,
} IrnnStatus;

/**
 * Observed entries of a matrix to complete.
 */
typedef struct IrnnCompletion IrnnCompletion;

/**
 * Penalty kind and parameters.
 */
typedef struct IrnnPenalty IrnnPenalty;

/**
 * Recovered matrix and per-stage traces.
 */
typedef struct IrnnResult IrnnResult;

/**
 * Continuation and stopping settings for [`irnn_complete`].
 */
typedef struct IrnnSolveOptions {
  /**
   * Initial regularization; nonpositive means `lambda0_scale * max|observed|`.
   */
  double lambda0;
  double lambda0_scale;
  double eta;
  double lambda_t_factor;
  /**
   * Proximal weight as a multiple of the Lipschitz constant.
   */
  double mu_factor;
  double tol;
  /**
   * Iteration budget per continuation stage.
   */
  size_t max_iter;
  /**
   * Negative disables the observation-fit stop.
   */
  double fit_tol;
  bool warm_start;
} IrnnSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *irnn_last_error_message(void);

/**
 * Creates a penalty from its name (`lp`, `scad`, `log`, `mcp`, `capped-l1`,
 * `etp`, `geman`, `laplace`, `nuclear`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out_penalty` writable.
 */
enum IrnnStatus irnn_penalty_new(const char *name,
                                 double lambda,
                                 double gamma,
                                 double p,
                                 struct IrnnPenalty **out_penalty);

/**
 * # Safety
 * `penalty` must come from [`irnn_penalty_new`] or be null.
 */
void irnn_penalty_free(struct IrnnPenalty *penalty);

/**
 * `g(theta)`.
 *
 * # Safety
 * `penalty` must be a live handle and `out_value` writable.
 */
enum IrnnStatus irnn_penalty_value(const struct IrnnPenalty *penalty,
                                   double theta,
                                   double *out_value);

/**
 * The canonical supergradient at `theta`; may be `+inf` at zero.
 *
 * # Safety
 * `penalty` must be a live handle and `out_value` writable.
 */
enum IrnnStatus irnn_penalty_supergradient(const struct IrnnPenalty *penalty,
                                           double theta,
                                           double *out_value);

/**
 * Builds a completion problem from `count` observed entries with zero-based
 * row and column indices.
 *
 * # Safety
 * The three arrays must hold `count` elements; `out_problem` must be writable.
 */
enum IrnnStatus irnn_completion_new(size_t rows,
                                    size_t cols,
                                    size_t count,
                                    const size_t *row_index,
                                    const size_t *col_index,
                                    const double *values,
                                    struct IrnnCompletion **out_problem);

/**
 * # Safety
 * `problem` must come from [`irnn_completion_new`] or be null.
 */
void irnn_completion_free(struct IrnnCompletion *problem);

/**
 * Defaults for noise-free (`noisy == false`) or noisy observations.
 */
struct IrnnSolveOptions irnn_solve_options_default(bool noisy);

/**
 * Runs the continuation solver.
 *
 * # Safety
 * Handles must be live, `options` readable and `out_result` writable.
 */
enum IrnnStatus irnn_complete(const struct IrnnCompletion *problem,
                              const struct IrnnPenalty *penalty,
                              const struct IrnnSolveOptions *options,
                              struct IrnnResult **out_result);

/**
 * # Safety
 * `result` must come from [`irnn_complete`] or be null.
 */
void irnn_result_free(struct IrnnResult *result);

/**
 * # Safety
 * `result` must be live; the outputs must be writable.
 */
enum IrnnStatus irnn_result_shape(const struct IrnnResult *result,
                                  size_t *out_rows,
                                  size_t *out_cols);

/**
 * Copies the recovered matrix row-major into `buffer` of `len` doubles.
 *
 * # Safety
 * `result` must be live and `buffer` must hold `len` doubles.
 */
enum IrnnStatus irnn_result_copy(const struct IrnnResult *result, double *buffer, size_t len);

/**
 * Total iterations, number of continuation stages and final objective.
 *
 * # Safety
 * `result` must be live; the outputs must be writable.
 */
enum IrnnStatus irnn_result_summary(const struct IrnnResult *result,
                                    size_t *out_iterations,
                                    size_t *out_stages,
                                    double *out_objective);

/**
 * Weighted singular value thresholding of a row-major `rows x cols`
 * matrix with `min(rows, cols)` nondecreasing weights (`+inf` allowed).
 *
 * # Safety
 * `y` and `out_x` must hold `rows * cols` doubles, `weights` `min(rows, cols)`.
 */
enum IrnnStatus irnn_wsvt(size_t rows,
                          size_t cols,
                          const double *y,
                          const double *weights,
                          double scale,
                          double *out_x);

/**
 * Singular value thresholding with threshold `tau`.
 *
 * # Safety
 * `y` and `out_x` must hold `rows * cols` doubles.
 */
enum IrnnStatus irnn_svt(size_t rows, size_t cols, const double *y, double tau, double *out_x);

/**
 * `||x_hat - m||_F / ||m||_F` for row-major matrices.
 *
 * # Safety
 * `x_hat` and `m` must hold `rows * cols` doubles; `out_value` writable.
 */
enum IrnnStatus irnn_relative_error(size_t rows,
                                    size_t cols,
                                    const double *x_hat,
                                    const double *m,
                                    double *out_value);

/**
 * PSNR in dB of `len` 8-bit samples stored as doubles; `+inf` when equal.
 *
 * # Safety
 * Both arrays must hold `len` doubles; `out_value` writable.
 */
enum IrnnStatus irnn_psnr(size_t len,
                          const double *x_hat,
                          const double *reference,
                          double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRNN_H */
