/* C interface to the age-of-information scheduling library. */

#ifndef AOI_FFI_H
#define AOI_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Scheduler selector for [`aoi_simulate`].
 */
typedef enum AoiScheduler {
  AoiScheduler_Whittle = 0,
  AoiScheduler_MaxAge = 1,
  AoiScheduler_RoundRobin = 2,
  AoiScheduler_Random = 3,
  /**
   * Serve the user picked by the jointly solved age-optimal table.
   */
  AoiScheduler_Optimal = 4,
} AoiScheduler;

/**
 * Status code of every C-ABI call.
 */
typedef enum AoiStatus {
  AoiStatus_Ok = 0,
  /**
   * A pointer argument was null.
   */
  AoiStatus_NullPointer = 1,
  /**
   * An argument was out of its documented domain.
   */
  AoiStatus_InvalidArgument = 2,
  /**
   * A solver failed to converge or refused the problem size.
   */
  AoiStatus_SolverFailed = 3,
  /**
   * Internal panic; the library state is untouched but the call produced
   * nothing.
   */
  AoiStatus_Internal = 4,
} AoiStatus;

/**
 * Simulation results handle.
 */
typedef struct AoiSimReport AoiSimReport;

/**
 * Solved single-user policy: action table, gain, and extracted threshold.
 */
typedef struct AoiSolvedPolicy AoiSolvedPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Whittle index I(x, lambda) at arrival probability `p`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum AoiStatus aoi_whittle_index(double p, uint64_t x, uint8_t lambda, double *out);

/**
 * Average cost of the threshold policy `x_bar` at (p, cost), closed form.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum AoiStatus aoi_average_cost(double p, double cost, uint64_t x_bar, double *out);

/**
 * Same quantity summed over the post-action chain's stationary
 * distribution; provided so bindings can cross-check the two routes.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum AoiStatus aoi_dtmc_average_cost(double p, double cost, uint64_t x_bar, double *out);

/**
 * Cost-optimal threshold for (p, cost); cost must be nonnegative.
 *
 * # Safety
 * `out` must point to a writable uint64.
 */
enum AoiStatus aoi_optimal_threshold(double p, double cost, uint64_t *out);

/**
 * Solves the single-user sub-problem by relative value iteration.
 *
 * On success, writes a heap-allocated handle; release it with
 * [`aoi_policy_free`].
 *
 * # Safety
 * `out` must point to a writable pointer slot.
 */
enum AoiStatus aoi_solve_subproblem(double p,
                                    double cost,
                                    uint64_t x_max,
                                    double tolerance,
                                    uint64_t max_iterations,
                                    struct AoiSolvedPolicy **out);

/**
 * Average cost per slot of the solved policy.
 *
 * # Safety
 * `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
 * point to a writable double.
 */
enum AoiStatus aoi_policy_gain(const struct AoiSolvedPolicy *policy, double *out);

/**
 * Extracted threshold of the solved policy.
 *
 * # Safety
 * `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
 * point to a writable uint64.
 */
enum AoiStatus aoi_policy_threshold(const struct AoiSolvedPolicy *policy, uint64_t *out);

/**
 * Greedy action (0 = idle, 1 = update) at state (x, lambda).
 *
 * # Safety
 * `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
 * point to a writable byte.
 */
enum AoiStatus aoi_policy_action(const struct AoiSolvedPolicy *policy,
                                 uint64_t x,
                                 uint8_t lambda,
                                 uint8_t *out);

/**
 * Releases a policy handle. Null is a no-op.
 *
 * # Safety
 * `policy` must be null or a handle from [`aoi_solve_subproblem`] not yet
 * freed.
 */
void aoi_policy_free(struct AoiSolvedPolicy *policy);

/**
 * Runs one seeded simulation of `horizon` slots for `n` users with arrival
 * probabilities `ps[0..n]`, under the selected scheduler. The `Optimal`
 * scheduler solves the joint model at truncation `joint_x_max` first
 * (supported for n <= 3).
 *
 * On success, writes a heap-allocated report handle; release it with
 * [`aoi_report_free`].
 *
 * # Safety
 * `ps` must point to `n` readable doubles and `out` to a writable pointer
 * slot.
 */
enum AoiStatus aoi_simulate(const double *ps,
                            uintptr_t n,
                            enum AoiScheduler scheduler,
                            uint64_t horizon,
                            uint64_t seed,
                            uint64_t joint_x_max,
                            struct AoiSimReport **out);

/**
 * Time-averaged total age of the run.
 *
 * # Safety
 * `report` must be a live handle from [`aoi_simulate`]; `out` must point to
 * a writable double.
 */
enum AoiStatus aoi_report_total_age(const struct AoiSimReport *report, double *out);

/**
 * Per-user average age and delivered-update count for user `user`.
 *
 * # Safety
 * `report` must be a live handle from [`aoi_simulate`]; `avg_age` and
 * `updates` must point to writable slots.
 */
enum AoiStatus aoi_report_user(const struct AoiSimReport *report,
                               uintptr_t user,
                               double *avg_age,
                               uint64_t *updates);

/**
 * Slots wasted on users without an arrival.
 *
 * # Safety
 * `report` must be a live handle from [`aoi_simulate`]; `out` must point to
 * a writable uint64.
 */
enum AoiStatus aoi_report_wasted_slots(const struct AoiSimReport *report, uint64_t *out);

/**
 * Releases a report handle. Null is a no-op.
 *
 * # Safety
 * `report` must be null or a handle from [`aoi_simulate`] not yet freed.
 */
void aoi_report_free(struct AoiSimReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AOI_FFI_H */
