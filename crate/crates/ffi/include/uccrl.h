#ifndef UCCRL_H
#define UCCRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum UccrlStatus {
  UCCRL_STATUS_OK = 0,
  UCCRL_STATUS_NULL_POINTER = 1,
  UCCRL_STATUS_INVALID_ARGUMENT = 2,
  UCCRL_STATUS_NON_CONVERGENCE = 3,
  UCCRL_STATUS_UNSUPPORTED = 4,
  UCCRL_STATUS_TOO_LARGE = 5,
  UCCRL_STATUS_IO = 6,
  /**
   * Output buffer shorter than the data.
   */
  UCCRL_STATUS_BUFFER_TOO_SMALL = 7,
  UCCRL_STATUS_PANIC = 8,
} UccrlStatus;

/**
 * Environment handle.
 */
typedef struct UccrlEnv UccrlEnv;

/**
 * Finished run handle.
 */
typedef struct UccrlRun UccrlRun;

/**
 * Agent settings. Zero or negative fields fall back to defaults:
 * `cells_per_axis = 0` picks n from the horizon, `lipschitz`/`alpha` come
 * from the environment, `span_bound` uses `ln T`.
 */
typedef struct UccrlAgentOptions {
  size_t cells_per_axis;
  double delta;
  double lipschitz;
  double alpha;
  double span_bound;
  bool span_truncation;
  /**
   * Restart with doubling horizons instead of a fixed horizon.
   */
  bool anytime;
} UccrlAgentOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *uccrl_last_error_message(void);

/**
 * Defaults: auto n, delta 0.1, regularity from the environment.
 */
struct UccrlAgentOptions uccrl_agent_options_default(void);

/**
 * Piecewise-constant hard instance with `n_cells * reward_actions` arms.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum UccrlStatus uccrl_env_new_lower_bound(size_t n_cells,
                                           size_t reward_actions,
                                           double epsilon,
                                           uint64_t seed,
                                           struct UccrlEnv **out);

/**
 * Built-in smooth family by name, e.g. `"wrapped-kernel"`.
 *
 * # Safety
 * `family` must be a nul-terminated string and `out` valid for writing.
 */
enum UccrlStatus uccrl_env_new_smooth(const char *family,
                                      size_t dimension,
                                      size_t num_actions,
                                      double lipschitz,
                                      double alpha,
                                      uint64_t seed,
                                      struct UccrlEnv **out);

/**
 * # Safety
 * `env` must come from a constructor and not be freed yet, or be null.
 */
void uccrl_env_free(struct UccrlEnv *env);

/**
 * Dimension of the state space, 0 for a null handle.
 *
 * # Safety
 * `env` must be a live handle or null.
 */
size_t uccrl_env_dimension(const struct UccrlEnv *env);

/**
 * Number of actions, 0 for a null handle.
 *
 * # Safety
 * `env` must be a live handle or null.
 */
size_t uccrl_env_num_actions(const struct UccrlEnv *env);

/**
 * Optimal gain: exact when known in closed form, otherwise from the
 * aggregation with `fine_n` cells per axis together with an error bound.
 *
 * # Safety
 * `env` must be a live handle; `gain` and `error_bound` valid for writing.
 */
enum UccrlStatus uccrl_env_optimal_gain(const struct UccrlEnv *env,
                                        size_t fine_n,
                                        double *gain,
                                        double *error_bound);

/**
 * Runs the agent for `horizon` steps. A null `options` means defaults.
 *
 * # Safety
 * `env` must be a live handle, `options` null or valid, `out` valid for
 * writing one pointer.
 */
enum UccrlStatus uccrl_run(const struct UccrlEnv *env,
                           const struct UccrlAgentOptions *options,
                           uint64_t horizon,
                           uint64_t seed,
                           struct UccrlRun **out);

/**
 * # Safety
 * `run` must come from [`uccrl_run`] and not be freed yet, or be null.
 */
void uccrl_run_free(struct UccrlRun *run);

/**
 * Steps taken, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t uccrl_run_len(const struct UccrlRun *run);

/**
 * Episodes that ended by the doubling rule, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t uccrl_run_completed_episodes(const struct UccrlRun *run);

/**
 * Sum of rewards, NaN for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
double uccrl_run_total_reward(const struct UccrlRun *run);

/**
 * 1 if the run stopped early because planning failed, else 0.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
bool uccrl_run_aborted(const struct UccrlRun *run);

/**
 * Copies per-step rewards into `out`, which must hold `uccrl_run_len` values.
 *
 * # Safety
 * `run` must be a live handle and `out` valid for `capacity` writes.
 */
enum UccrlStatus uccrl_run_rewards(const struct UccrlRun *run, double *out, size_t capacity);

/**
 * Copies per-step actions into `out`.
 *
 * # Safety
 * `run` must be a live handle and `out` valid for `capacity` writes.
 */
enum UccrlStatus uccrl_run_actions(const struct UccrlRun *run, size_t *out, size_t capacity);

/**
 * Copies cumulative regret `t * rho_star - sum of rewards` into `out`.
 *
 * # Safety
 * `run` must be a live handle and `out` valid for `capacity` writes.
 */
enum UccrlStatus uccrl_run_regret(const struct UccrlRun *run,
                                  double rho_star,
                                  double *out,
                                  size_t capacity);

/**
 * Gain and bias of a stationary policy on a finite unichain MDP.
 * `rewards` is `states * actions` row-major by state, `transitions` is
 * `states * actions * states`, `bias` receives `states` values.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum UccrlStatus uccrl_solve_poisson(size_t states,
                                     size_t actions,
                                     const double *rewards,
                                     const double *transitions,
                                     const size_t *policy,
                                     double *gain,
                                     double *bias);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UCCRL_H */
