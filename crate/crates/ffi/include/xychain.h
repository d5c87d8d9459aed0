#ifndef XYCHAIN_H
#define XYCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum XyStatus {
  XY_STATUS_OK = 0,
  /**
   * Output could not be written.
   */
  XY_STATUS_IO = 1,
  XY_STATUS_INVALID_INPUT = 2,
  /**
   * Quadrature failure, critical point, divergence and similar.
   */
  XY_STATUS_NUMERICAL = 3,
  XY_STATUS_NULL_POINTER = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  XY_STATUS_PANIC = 5,
} XyStatus;

typedef enum XyParam {
  XY_PARAM_J = 0,
  XY_PARAM_GAMMA = 1,
  XY_PARAM_D = 2,
} XyParam;

/**
 * Evaluated chain at one parameter point.
 */
typedef struct XyChain XyChain;

/**
 * Likelihood tables for one protocol configuration.
 */
typedef struct XyProtocol XyProtocol;

typedef struct XyTrace XyTrace;

typedef struct XyCorrelators {
  double mz;
  double gxx;
  double gyy;
  double gzz;
} XyCorrelators;

typedef struct XyFisher {
  /**
   * Classical FI of the σᶻ⊗σᶻ measurement.
   */
  double f;
  /**
   * Quantum FI.
   */
  double h;
  /**
   * Saturation F/H, with the limit taken at degenerate points.
   */
  double s;
  bool singular;
  bool s_from_limit;
} XyFisher;

typedef struct XySloppiness {
  double det;
  /**
   * Descending.
   */
  double eigenvalues[3];
  double condition;
  double relative_det;
  bool singular;
} XySloppiness;

typedef struct XyProtocolConfig {
  double j_true;
  double gamma;
  double d;
  double j_guess;
  uint64_t shots;
  size_t rounds;
  /**
   * Grid of |j| for the estimator.
   */
  double grid_lo;
  double grid_hi;
  size_t grid_points;
  /**
   * Field antiparallel to the estimate, so that J/B < 0.
   */
  bool opposed;
  bool sign_switch;
} XyProtocolConfig;

typedef struct XyRound {
  double field;
  /**
   * Outcomes ↑↑, ↑↓, ↓↑, ↓↓.
   */
  uint64_t counts[4];
  double estimate;
  double variance;
  bool opposed;
  bool at_edge;
  bool degenerate;
} XyRound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next call into this library from the
 * same thread.
 */
const char *xy_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *xy_version(void);

/**
 * Evaluates the chain at `(J, gamma, D)`.
 *
 * `tol <= 0` selects the default quadrature tolerance.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum XyStatus xy_chain_new(double j, double gamma, double d, double tol, struct XyChain **out);

/**
 * # Safety
 * `chain` must be NULL or a handle from [`xy_chain_new`] not yet freed.
 */
void xy_chain_free(struct XyChain *chain);

/**
 * # Safety
 * `chain` must be a live handle and `out` valid for writing.
 */
enum XyStatus xy_chain_correlators(const struct XyChain *chain, struct XyCorrelators *out);

/**
 * Two-spin density matrix, row-major in the basis |00⟩, |01⟩, |10⟩, |11⟩.
 *
 * # Safety
 * `chain` must be a live handle and `out` valid for 16 doubles.
 */
enum XyStatus xy_chain_state(const struct XyChain *chain, double *out);

/**
 * Classical and quantum Fisher information about `wrt`.
 *
 * # Safety
 * `chain` must be a live handle and `out` valid for writing.
 */
enum XyStatus xy_chain_fisher(const struct XyChain *chain, enum XyParam wrt, struct XyFisher *out);

/**
 * QFI matrix, Uhlmann matrix and spectrum summary. Either matrix pointer
 * may be NULL; matrices are row-major 3×3 in the order J, gamma, D.
 *
 * # Safety
 * `chain` must be a live handle; non-NULL outputs must be writable, the
 * matrices for 9 doubles each.
 */
enum XyStatus xy_chain_qfim(const struct XyChain *chain,
                            double *qfim,
                            double *uhlmann,
                            struct XySloppiness *sloppiness);

/**
 * Builds the likelihood tables for a protocol configuration.
 *
 * # Safety
 * `cfg` must point to a valid configuration and `out` be writable.
 */
enum XyStatus xy_protocol_new(const struct XyProtocolConfig *cfg,
                              double tol,
                              struct XyProtocol **out);

/**
 * # Safety
 * `protocol` must be NULL or a handle from [`xy_protocol_new`].
 */
void xy_protocol_free(struct XyProtocol *protocol);

/**
 * Runs the adaptive protocol with `seed`.
 *
 * # Safety
 * `protocol` must be a live handle and `out` writable.
 */
enum XyStatus xy_protocol_run(const struct XyProtocol *protocol,
                              uint64_t seed,
                              struct XyTrace **out);

/**
 * # Safety
 * `trace` must be NULL or a handle from [`xy_protocol_run`].
 */
void xy_trace_free(struct XyTrace *trace);

/**
 * Number of recorded rounds; 0 for NULL.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
size_t xy_trace_len(const struct XyTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum XyStatus xy_trace_round(const struct XyTrace *trace, size_t index, struct XyRound *out);

/**
 * Final estimate and variance; returns whether the run converged.
 *
 * # Safety
 * `trace` must be a live handle; `estimate` and `variance` may be NULL.
 */
bool xy_trace_result(const struct XyTrace *trace, double *estimate, double *variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XYCHAIN_H */
