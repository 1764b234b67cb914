#ifndef NETCM_H
#define NETCM_H

/* Generated by cbindgen at build time. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NetcmStatus {
  NETCM_STATUS_OK = 0,
  NETCM_STATUS_NULL_POINTER = 1,
  NETCM_STATUS_INVALID_ARGUMENT = 2,
  NETCM_STATUS_INVALID_STATE = 3,
  NETCM_STATUS_DIMENSION = 4,
  NETCM_STATUS_IO = 5,
  NETCM_STATUS_FORMAT = 6,
  NETCM_STATUS_NUMERICAL = 7,
  NETCM_STATUS_PANIC = 8,
} NetcmStatus;

typedef enum NetcmFeasibility {
  NETCM_FEASIBILITY_FEASIBLE = 0,
  NETCM_FEASIBILITY_INFEASIBLE_EVIDENCE = 1,
  NETCM_FEASIBILITY_INCONCLUSIVE = 2,
} NetcmFeasibility;

/**
 * Opaque block covariance matrix.
 */
typedef struct NetcmCovariance NetcmCovariance;

/**
 * Opaque density operator.
 */
typedef struct NetcmState NetcmState;

/**
 * Numeric part of a criterion report.
 */
typedef struct NetcmReport {
  double lhs;
  double rhs;
  double margin;
  double tolerance;
  bool pass;
} NetcmReport;

typedef struct NetcmFeasibilityResult {
  enum NetcmFeasibility status;
  double residual;
  size_t iterations;
} NetcmFeasibilityResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *netcm_last_error(void);

/**
 * Library version, static string.
 */
const char *netcm_version(void);

/**
 * GHZ state on `parties` systems of dimension `dim` over levels 0 and
 * `dim - 1`, mixed with white noise at visibility `v`.
 *
 * # Safety
 * `out` must be a valid pointer to write the new handle to.
 */
enum NetcmStatus netcm_state_ghz(size_t parties, size_t dim, double v, struct NetcmState **out);

/**
 * Builds a state from a JSON state specification (see the CLI docs).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NetcmStatus netcm_state_from_spec(const char *json, struct NetcmState **out);

/**
 * Loads an NCMX density matrix with `n_dims` factor dimensions labeled
 * `A, B, C, ...`.
 *
 * # Safety
 * `path` must be NUL-terminated, `dims` must point to `n_dims` readable
 * values and `out` must be valid.
 */
enum NetcmStatus netcm_state_from_ncmx(const char *path,
                                       const size_t *dims,
                                       size_t n_dims,
                                       struct NetcmState **out);

/**
 * Splits every factor into `d1 x d2`, producing a new state.
 *
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum NetcmStatus netcm_state_split(const struct NetcmState *state,
                                   size_t d1,
                                   size_t d2,
                                   struct NetcmState **out);

/**
 * Hilbert space dimension, 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t netcm_state_dim(const struct NetcmState *state);

/**
 * # Safety
 * `state` must be null or a handle not freed before.
 */
void netcm_state_free(struct NetcmState *state);

/**
 * Covariance matrix for a named observable set: `pauli-z`, `w-set`,
 * `full-product` or `cluster-set`.
 *
 * # Safety
 * `state` must be live, `observables` NUL-terminated, `out` valid.
 */
enum NetcmStatus netcm_covariance(const struct NetcmState *state,
                                  const char *observables,
                                  struct NetcmCovariance **out);

/**
 * Side length of the covariance matrix, 0 for a null handle.
 *
 * # Safety
 * `cm` must be null or a live handle.
 */
size_t netcm_covariance_dim(const struct NetcmCovariance *cm);

/**
 * Copies the real part row-major into `buf`, which must hold `dim * dim` values.
 *
 * # Safety
 * `cm` must be live and `buf` must point to `len` writable doubles.
 */
enum NetcmStatus netcm_covariance_copy_real(const struct NetcmCovariance *cm,
                                            double *buf,
                                            size_t len);

/**
 * # Safety
 * `cm` must be null or a handle not freed before.
 */
void netcm_covariance_free(struct NetcmCovariance *cm);

/**
 * Trace-norm criterion. `topology` is `triangle`, `pairwise`, `ring`,
 * `five-node` or a path to a JSON topology file.
 *
 * # Safety
 * `cm` must be live, `topology` NUL-terminated, `out` valid.
 */
enum NetcmStatus netcm_trace_norm(const struct NetcmCovariance *cm,
                                  const char *topology,
                                  struct NetcmReport *out);

/**
 * Ξ positivity test; every node of `state` must have two factors.
 *
 * # Safety
 * `state` must be live and `out` valid.
 */
enum NetcmStatus netcm_xi_psd(const struct NetcmState *state, struct NetcmReport *out);

/**
 * Source-decomposition feasibility search. Pass `tol <= 0` or
 * `max_iter == 0` for the defaults (1e-7, 50000).
 *
 * # Safety
 * `cm` must be live, `topology` NUL-terminated, `out` valid.
 */
enum NetcmStatus netcm_feasibility(const struct NetcmCovariance *cm,
                                   const char *topology,
                                   double tol,
                                   size_t max_iter,
                                   struct NetcmFeasibilityResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETCM_H */
