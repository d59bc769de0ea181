//! Structure-agnostic value-iteration solvers shared by the single-user and
//! joint models. These are the brute-force oracles: they must not assume the
//! threshold shape they are used to verify.

use crate::error::Error;
use crate::Result;

/// Finite state-action model with enumerable successors.
pub(crate) trait FiniteMdp {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn cost(&self, state: usize, action: usize) -> f64;
    fn for_each_successor(&self, state: usize, action: usize, f: impl FnMut(usize, f64));
}

/// Configuration for the discounted solver.
#[derive(Debug, Clone, Copy)]
pub struct DiscountedSolverConfig {
    /// Discount factor in (0, 1).
    pub alpha: f64,
    /// Sup-norm stopping tolerance on successive iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl DiscountedSolverConfig {
    pub fn new(alpha: f64, tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "discount factor must be in (0, 1), got {alpha}"
            )));
        }
        Ok(DiscountedSolverConfig {
            alpha,
            tolerance,
            max_iterations,
        })
    }
}

/// Greedy action table plus the converged solver diagnostics.
///
/// `gain` is the long-run average cost per slot for the average-cost solver,
/// and the normalized value (1 − α)·J(reference) for the discounted solver.
/// `values` holds the converged bias (average cost) or value function
/// (discounted), indexed by model state.
#[derive(Debug, Clone)]
pub struct SolvedPolicy {
    pub(crate) actions: Vec<u8>,
    pub gain: f64,
    pub residual: f64,
    pub iterations: usize,
    pub(crate) values: Vec<f64>,
}

impl SolvedPolicy {
    pub fn action(&self, state: usize) -> u8 {
        self.actions[state]
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Self-transition weight mixed into every value-iteration sweep. It leaves
/// each stationary policy's average cost and the optimal action sets
/// unchanged while making the iteration converge on periodic chains
/// (deterministic arrivals cycle through the ages).
const APERIODICITY_DAMPING: f64 = 0.5;

/// Ties between actions within this relative width resolve to the lower
/// action index, i.e. in favor of idling.
const TIE_EPS: f64 = 1e-7;

fn greedy_action<M: FiniteMdp>(model: &M, state: usize, weight: f64, values: &[f64]) -> (u8, f64) {
    let mut best_action = 0u8;
    let mut best_q = f64::INFINITY;
    for action in 0..model.num_actions() {
        let mut expected = 0.0;
        model.for_each_successor(state, action, |next, prob| {
            expected += prob * values[next];
        });
        let q = model.cost(state, action) + weight * expected;
        if q < best_q - TIE_EPS * (1.0 + best_q.abs()) {
            best_q = q;
            best_action = action as u8;
        } else if q < best_q {
            // within the tie window: keep the earlier action but tighten
            // the value so the window does not drift
            best_q = q;
        }
    }
    (best_action, best_q)
}

/// Relative value iteration with span-seminorm stopping.
///
/// Iterates the damped optimality operator, renormalizing at `reference`
/// each sweep. Stops when the span of the sweep-to-sweep difference falls
/// to `tolerance`; the optimal gain is then bracketed by the extreme
/// differences and reported as their midpoint.
pub(crate) fn solve_average_cost<M: FiniteMdp>(
    model: &M,
    tolerance: f64,
    max_iterations: usize,
    reference: usize,
) -> Result<SolvedPolicy> {
    let n = model.num_states();
    assert!(reference < n);
    let tau = APERIODICITY_DAMPING;
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut gain = f64::NAN;
    let mut converged_at = None;

    for iteration in 0..max_iterations {
        let mut min_diff = f64::INFINITY;
        let mut max_diff = f64::NEG_INFINITY;
        for state in 0..n {
            let (_, best_q) = greedy_action(model, state, tau, &values);
            let damped = (1.0 - tau) * values[state] + best_q;
            next[state] = damped;
            let diff = damped - values[state];
            min_diff = min_diff.min(diff);
            max_diff = max_diff.max(diff);
        }
        residual = max_diff - min_diff;
        gain = 0.5 * (min_diff + max_diff);
        let offset = next[reference];
        for (v, w) in values.iter_mut().zip(&next) {
            *v = w - offset;
        }
        if residual <= tolerance {
            converged_at = Some(iteration + 1);
            break;
        }
    }

    let iterations = converged_at.ok_or(Error::NoConvergence {
        iterations: max_iterations,
        residual,
        tolerance,
    })?;

    let actions = (0..n)
        .map(|state| greedy_action(model, state, tau, &values).0)
        .collect();
    Ok(SolvedPolicy {
        actions,
        gain,
        residual,
        iterations,
        values,
    })
}

/// Discounted value iteration to the fixed point of the discounted
/// optimality operator, sup-norm stopping.
pub(crate) fn solve_discounted<M: FiniteMdp>(
    model: &M,
    config: DiscountedSolverConfig,
    reference: usize,
) -> Result<SolvedPolicy> {
    let n = model.num_states();
    assert!(reference < n);
    let alpha = config.alpha;
    let mut values = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut converged_at = None;

    for iteration in 0..config.max_iterations {
        let mut sup = 0.0f64;
        for state in 0..n {
            let (_, best_q) = greedy_action(model, state, alpha, &values);
            next[state] = best_q;
            sup = sup.max((best_q - values[state]).abs());
        }
        residual = sup;
        std::mem::swap(&mut values, &mut next);
        if residual <= config.tolerance {
            converged_at = Some(iteration + 1);
            break;
        }
    }

    let iterations = converged_at.ok_or(Error::NoConvergence {
        iterations: config.max_iterations,
        residual,
        tolerance: config.tolerance,
    })?;

    let actions = (0..n)
        .map(|state| greedy_action(model, state, alpha, &values).0)
        .collect();
    let gain = (1.0 - alpha) * values[reference];
    Ok(SolvedPolicy {
        actions,
        gain,
        residual,
        iterations,
        values,
    })
}
