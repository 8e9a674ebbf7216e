#ifndef NETGAME_H
#define NETGAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NgStatus {
  NG_STATUS_OK = 0,
  NG_STATUS_NULL_POINTER = 1,
  NG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed configuration or invalid game data.
   */
  NG_STATUS_CONFIG = 3,
  /**
   * Numerical or regularity failure.
   */
  NG_STATUS_NUMERICAL = 4,
  NG_STATUS_NON_CONVERGENCE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  NG_STATUS_PANIC = 6,
} NgStatus;

typedef enum NgDynamicsMode {
  NG_DYNAMICS_MODE_SIMULTANEOUS = 0,
  NG_DYNAMICS_MODE_SEQUENTIAL = 1,
  /**
   * `param` is the relaxation weight in (0, 1].
   */
  NG_DYNAMICS_MODE_RELAXED = 2,
  /**
   * `param` is the RK4 step.
   */
  NG_DYNAMICS_MODE_CONTINUOUS_RK4 = 3,
  /**
   * `param` is the initial projection step.
   */
  NG_DYNAMICS_MODE_PROJECTION = 4,
} NgDynamicsMode;

typedef enum NgTerminal {
  NG_TERMINAL_CONVERGED = 0,
  NG_TERMINAL_MAX_ITERS = 1,
  NG_TERMINAL_OSCILLATION = 2,
} NgTerminal;

typedef enum NgParameter {
  /**
   * Linear-quadratic intercepts.
   */
  NG_PARAMETER_INTERCEPT = 0,
  /**
   * Linear-quadratic linear cost term.
   */
  NG_PARAMETER_LINEAR_TERM = 1,
  /**
   * Races peer-effect strength.
   */
  NG_PARAMETER_GAMMA = 2,
  /**
   * Multi-activity intercepts, interleaved per agent.
   */
  NG_PARAMETER_ACTIVITY_INTERCEPTS = 3,
} NgParameter;

/**
 * Opaque game handle.
 */
typedef struct NgGame NgGame;

/**
 * Opaque network handle.
 */
typedef struct NgNetwork NgNetwork;

typedef struct NgSpectral {
  double spectral_norm;
  double infinity_norm;
  /**
   * NaN when the network is not symmetric.
   */
  double min_eigenvalue;
  bool is_symmetric;
} NgSpectral;

typedef struct NgCertificate {
  double kappa1;
  double kappa2;
  double alpha_2;
  double alpha_inf;
  /**
   * NaN when the network is not symmetric.
   */
  double alpha_min;
  bool existence_uniqueness;
  bool continuous_br_convergence;
  bool simultaneous_br_convergence;
  bool sequential_br_convergence;
  bool lipschitz_continuity;
  bool potential;
} NgCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *ng_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ng_string_free(char *s);

/**
 * Network from a row-major `n × n` weight matrix.
 *
 * # Safety
 * `weights` must point to `n * n` doubles; `out` must be writable.
 */
enum NgStatus ng_network_from_dense(const double *weights, size_t n, struct NgNetwork **out);

/**
 * Network from a JSON generator description such as
 * `{"kind": "complete", "n": 4}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NgStatus ng_network_from_json(const char *json, struct NgNetwork **out);

/**
 * # Safety
 * `net` must come from this library and not have been freed.
 */
void ng_network_free(struct NgNetwork *net);

/**
 * # Safety
 * `net` must be a live handle and `n_agents` writable.
 */
enum NgStatus ng_network_size(const struct NgNetwork *net, size_t *n_agents);

/**
 * Spectral measures; `sym_tol <= 0` selects the default tolerance.
 *
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum NgStatus ng_network_spectral(const struct NgNetwork *net,
                                  double sym_tol,
                                  struct NgSpectral *out);

/**
 * Scalar linear-quadratic game `½x² + (kⁱzⁱ − cⁱ)x` on `x ≥ 0`. The
 * network is copied.
 *
 * # Safety
 * `k` and `intercept` must point to one double per agent.
 */
enum NgStatus ng_game_scalar_lq(const struct NgNetwork *net,
                                const double *k,
                                const double *intercept,
                                struct NgGame **out);

/**
 * Races with response `γz(bⁱ − z)` on `[aⁱ, bⁱ]`.
 *
 * # Safety
 * `lower` and `upper` must point to one double per agent.
 */
enum NgStatus ng_game_races(const struct NgNetwork *net,
                            double gamma,
                            const double *lower,
                            const double *upper,
                            struct NgGame **out);

/**
 * Game from the JSON `game` object of a run configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NgStatus ng_game_from_json(const char *json, struct NgGame **out);

/**
 * # Safety
 * `g` must come from this library and not have been freed.
 */
void ng_game_free(struct NgGame *g);

/**
 * Profile length `N·n`.
 *
 * # Safety
 * `g` must be a live handle and `dim` writable.
 */
enum NgStatus ng_game_dim(const struct NgGame *g, size_t *dim);

/**
 * Margins and guarantees of the certificate report.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum NgStatus ng_game_certify(const struct NgGame *g, uint64_t seed, struct NgCertificate *out);

/**
 * Full certificate report as JSON; release with `ng_string_free`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum NgStatus ng_game_certify_json(const struct NgGame *g, uint64_t seed, char **out);

/**
 * Natural residual `‖x − Π_X[x − F(x)]‖₂` of a feasible profile.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` be writable.
 */
enum NgStatus ng_game_residual(const struct NgGame *g, const double *x, size_t len, double *out);

/**
 * Equilibrium near `x0` (or the centre default start when `x0` is null).
 *
 * # Safety
 * `x0`, when non-null, and `x_out` must point to `len` doubles.
 */
enum NgStatus ng_game_find_equilibrium(const struct NgGame *g,
                                       const double *x0,
                                       double tol,
                                       double *x_out,
                                       size_t len);

/**
 * Runs best-response or projection dynamics from `x0`, writing the final
 * profile to `x_out`. Oscillation and exhausted budgets are reported
 * through `terminal`, not the status.
 *
 * # Safety
 * `x0` and `x_out` must point to `len` doubles; `terminal` and
 * `iterations` must be writable.
 */
enum NgStatus ng_game_run_dynamics(const struct NgGame *g,
                                   enum NgDynamicsMode mode,
                                   double param,
                                   const double *x0,
                                   size_t len,
                                   size_t max_iters,
                                   double residual_tol,
                                   double *x_out,
                                   enum NgTerminal *terminal,
                                   size_t *iterations);

/**
 * `∇_y x*` at the equilibrium `xstar`, row-major with one row per
 * profile coordinate. Call with `out = NULL` to query `n_params` only.
 *
 * # Safety
 * `xstar` must point to `len` doubles; `out`, when non-null, to
 * `len * out_cols` doubles; `n_params` must be writable.
 */
enum NgStatus ng_game_sensitivity(const struct NgGame *g,
                                  enum NgParameter parameter,
                                  const double *xstar,
                                  size_t len,
                                  double *out,
                                  size_t out_cols,
                                  size_t *n_params);

/**
 * Empty string helper for callers that want to reset the error slot.
 */
void ng_clear_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETGAME_H */
