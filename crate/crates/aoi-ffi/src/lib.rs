//! C ABI over the scheduling library: plain functions for the closed forms,
//! opaque handles for solved policies and simulations, status codes for
//! every fallible call.
//!
//! The header `include/aoi_ffi.h` is generated at build time by cbindgen.
//! Every function returns [`AoiStatus`]; results come back through out
//! pointers. Handles returned by `*_new`/`*_solve` functions own their data
//! and must be released with the matching `*_free`.

use std::panic::{catch_unwind, AssertUnwindSafe};

use aoi_core::arrival::ArrivalProcess;
use aoi_core::dtmc::dtmc_average_cost;
use aoi_core::mdp::{
    build_subproblem, extract_threshold, relative_value_iteration, solve_joint, SolvedPolicy,
    SubproblemModel,
};
use aoi_core::sim::{run, Scheduler, SimReport};
use aoi_core::types::{Age, ArrivalFlag};
use aoi_core::whittle::{average_cost, optimal_threshold, whittle_index, SubproblemParams};
use aoi_core::Error;

/// Status code of every C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoiStatus {
    Ok = 0,
    /// A pointer argument was null.
    NullPointer = 1,
    /// An argument was out of its documented domain.
    InvalidArgument = 2,
    /// A solver failed to converge or refused the problem size.
    SolverFailed = 3,
    /// Internal panic; the library state is untouched but the call produced
    /// nothing.
    Internal = 4,
}

fn status_of(err: &Error) -> AoiStatus {
    match err {
        Error::InvalidProbability { .. }
        | Error::NegativeCost { .. }
        | Error::InvalidThreshold { .. }
        | Error::Config(_) => AoiStatus::InvalidArgument,
        Error::TruncationTooSmall { .. }
        | Error::NoConvergence { .. }
        | Error::NonThresholdPolicy { .. }
        | Error::StateSpaceTooLarge { .. } => AoiStatus::SolverFailed,
        Error::Io(_) => AoiStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> AoiStatus) -> AoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => AoiStatus::Internal,
    }
}

fn parse_flag(lambda: u8) -> Option<ArrivalFlag> {
    match lambda {
        0 => Some(ArrivalFlag::Absent),
        1 => Some(ArrivalFlag::Present),
        _ => None,
    }
}

/// Whittle index I(x, lambda) at arrival probability `p`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn aoi_whittle_index(
    p: f64,
    x: u64,
    lambda: u8,
    out: *mut f64,
) -> AoiStatus {
    if out.is_null() {
        return AoiStatus::NullPointer;
    }
    let Some(flag) = parse_flag(lambda) else {
        return AoiStatus::InvalidArgument;
    };
    if !(p > 0.0 && p <= 1.0) || x == 0 {
        return AoiStatus::InvalidArgument;
    }
    guarded(|| {
        *out = whittle_index(Age::new(x), flag, p);
        AoiStatus::Ok
    })
}

/// Average cost of the threshold policy `x_bar` at (p, cost), closed form.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn aoi_average_cost(
    p: f64,
    cost: f64,
    x_bar: u64,
    out: *mut f64,
) -> AoiStatus {
    if out.is_null() {
        return AoiStatus::NullPointer;
    }
    if x_bar == 0 {
        return AoiStatus::InvalidArgument;
    }
    let params = match SubproblemParams::new(p, cost) {
        Ok(params) => params,
        Err(e) => return status_of(&e),
    };
    guarded(|| {
        *out = average_cost(x_bar, params);
        AoiStatus::Ok
    })
}

/// Same quantity summed over the post-action chain's stationary
/// distribution; provided so bindings can cross-check the two routes.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn aoi_dtmc_average_cost(
    p: f64,
    cost: f64,
    x_bar: u64,
    out: *mut f64,
) -> AoiStatus {
    if out.is_null() {
        return AoiStatus::NullPointer;
    }
    guarded(|| match dtmc_average_cost(p, x_bar, cost) {
        Ok(v) => {
            *out = v;
            AoiStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Cost-optimal threshold for (p, cost); cost must be nonnegative.
///
/// # Safety
/// `out` must point to a writable uint64.
#[no_mangle]
pub unsafe extern "C" fn aoi_optimal_threshold(p: f64, cost: f64, out: *mut u64) -> AoiStatus {
    if out.is_null() {
        return AoiStatus::NullPointer;
    }
    guarded(|| {
        let result = SubproblemParams::new(p, cost).and_then(optimal_threshold);
        match result {
            Ok(threshold) => {
                *out = threshold;
                AoiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Solved single-user policy: action table, gain, and extracted threshold.
pub struct AoiSolvedPolicy {
    model: SubproblemModel,
    policy: SolvedPolicy,
    threshold: u64,
}

/// Solves the single-user sub-problem by relative value iteration.
///
/// On success, writes a heap-allocated handle; release it with
/// [`aoi_policy_free`].
///
/// # Safety
/// `out` must point to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn aoi_solve_subproblem(
    p: f64,
    cost: f64,
    x_max: u64,
    tolerance: f64,
    max_iterations: u64,
    out: *mut *mut AoiSolvedPolicy,
) -> AoiStatus {
    if out.is_null() {
        return AoiStatus::NullPointer;
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return AoiStatus::InvalidArgument;
    }
    guarded(|| {
        let solved = build_subproblem(p, cost, x_max).and_then(|model| {
            let policy = relative_value_iteration(&model, tolerance, max_iterations as usize)?;
            let threshold = extract_threshold(&model, &policy)?;
            Ok(AoiSolvedPolicy {
                model,
                policy,
                threshold,
            })
        });
        match solved {
            Ok(handle) => {
                *out = Box::into_raw(Box::new(handle));
                AoiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Average cost per slot of the solved policy.
///
/// # Safety
/// `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
/// point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn aoi_policy_gain(
    policy: *const AoiSolvedPolicy,
    out: *mut f64,
) -> AoiStatus {
    if policy.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    *out = (*policy).policy.gain;
    AoiStatus::Ok
}

/// Extracted threshold of the solved policy.
///
/// # Safety
/// `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
/// point to a writable uint64.
#[no_mangle]
pub unsafe extern "C" fn aoi_policy_threshold(
    policy: *const AoiSolvedPolicy,
    out: *mut u64,
) -> AoiStatus {
    if policy.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    *out = (*policy).threshold;
    AoiStatus::Ok
}

/// Greedy action (0 = idle, 1 = update) at state (x, lambda).
///
/// # Safety
/// `policy` must be a live handle from [`aoi_solve_subproblem`]; `out` must
/// point to a writable byte.
#[no_mangle]
pub unsafe extern "C" fn aoi_policy_action(
    policy: *const AoiSolvedPolicy,
    x: u64,
    lambda: u8,
    out: *mut u8,
) -> AoiStatus {
    if policy.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    let Some(flag) = parse_flag(lambda) else {
        return AoiStatus::InvalidArgument;
    };
    let handle = &*policy;
    if x == 0 || x > handle.model.x_max() {
        return AoiStatus::InvalidArgument;
    }
    *out = handle.policy.action(handle.model.state_index(x, flag));
    AoiStatus::Ok
}

/// Releases a policy handle. Null is a no-op.
///
/// # Safety
/// `policy` must be null or a handle from [`aoi_solve_subproblem`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn aoi_policy_free(policy: *mut AoiSolvedPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Scheduler selector for [`aoi_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoiScheduler {
    Whittle = 0,
    MaxAge = 1,
    RoundRobin = 2,
    Random = 3,
    /// Serve the user picked by the jointly solved age-optimal table.
    Optimal = 4,
}

/// Simulation results handle.
pub struct AoiSimReport {
    report: SimReport,
}

/// Runs one seeded simulation of `horizon` slots for `n` users with arrival
/// probabilities `ps[0..n]`, under the selected scheduler. The `Optimal`
/// scheduler solves the joint model at truncation `joint_x_max` first
/// (supported for n <= 3).
///
/// On success, writes a heap-allocated report handle; release it with
/// [`aoi_report_free`].
///
/// # Safety
/// `ps` must point to `n` readable doubles and `out` to a writable pointer
/// slot.
#[no_mangle]
pub unsafe extern "C" fn aoi_simulate(
    ps: *const f64,
    n: usize,
    scheduler: AoiScheduler,
    horizon: u64,
    seed: u64,
    joint_x_max: u64,
    out: *mut *mut AoiSimReport,
) -> AoiStatus {
    if ps.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    if n == 0 {
        return AoiStatus::InvalidArgument;
    }
    let ps = std::slice::from_raw_parts(ps, n).to_vec();
    guarded(|| {
        let result = (|| {
            let process = ArrivalProcess::new(ps.clone(), seed)?;
            let joint = match scheduler {
                AoiScheduler::Optimal => Some(solve_joint(ps.clone(), joint_x_max, 1e-8)?),
                _ => None,
            };
            let kind = match scheduler {
                AoiScheduler::Whittle => Scheduler::Whittle,
                AoiScheduler::MaxAge => Scheduler::MaxAge,
                AoiScheduler::RoundRobin => Scheduler::RoundRobin,
                AoiScheduler::Random => Scheduler::Random,
                AoiScheduler::Optimal => {
                    Scheduler::OptimalLookup(joint.as_ref().expect("solved above"))
                }
            };
            run(&process, kind, horizon, None)
        })();
        match result {
            Ok(report) => {
                *out = Box::into_raw(Box::new(AoiSimReport { report }));
                AoiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Time-averaged total age of the run.
///
/// # Safety
/// `report` must be a live handle from [`aoi_simulate`]; `out` must point to
/// a writable double.
#[no_mangle]
pub unsafe extern "C" fn aoi_report_total_age(
    report: *const AoiSimReport,
    out: *mut f64,
) -> AoiStatus {
    if report.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    *out = (*report).report.time_avg_total_age;
    AoiStatus::Ok
}

/// Per-user average age and delivered-update count for user `user`.
///
/// # Safety
/// `report` must be a live handle from [`aoi_simulate`]; `avg_age` and
/// `updates` must point to writable slots.
#[no_mangle]
pub unsafe extern "C" fn aoi_report_user(
    report: *const AoiSimReport,
    user: usize,
    avg_age: *mut f64,
    updates: *mut u64,
) -> AoiStatus {
    if report.is_null() || avg_age.is_null() || updates.is_null() {
        return AoiStatus::NullPointer;
    }
    let r = &(*report).report;
    if user >= r.per_user_avg_age.len() {
        return AoiStatus::InvalidArgument;
    }
    *avg_age = r.per_user_avg_age[user];
    *updates = r.per_user_update_count[user];
    AoiStatus::Ok
}

/// Slots wasted on users without an arrival.
///
/// # Safety
/// `report` must be a live handle from [`aoi_simulate`]; `out` must point to
/// a writable uint64.
#[no_mangle]
pub unsafe extern "C" fn aoi_report_wasted_slots(
    report: *const AoiSimReport,
    out: *mut u64,
) -> AoiStatus {
    if report.is_null() || out.is_null() {
        return AoiStatus::NullPointer;
    }
    *out = (*report).report.wasted_slots;
    AoiStatus::Ok
}

/// Releases a report handle. Null is a no-op.
///
/// # Safety
/// `report` must be null or a handle from [`aoi_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aoi_report_free(report: *mut AoiSimReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
