//! The single-user sub-problem as an explicit finite MDP, solved by value
//! iteration as an independent check on the closed forms.
//!
//! States are (age x, arrival flag λ) with 1 ≤ x ≤ `x_max`; the age clips at
//! `x_max`, which is harmless as long as the policy's threshold sits well
//! below the truncation (the stationary tail above the threshold decays
//! geometrically). Actions are 0 = idle, 1 = update.

use crate::error::Error;
use crate::types::ArrivalFlag;
use crate::Result;

use super::solver::{self, DiscountedSolverConfig, FiniteMdp, SolvedPolicy};

pub const IDLE: u8 = 0;
pub const UPDATE: u8 = 1;

/// Explicit single-user model: arrival probability, update cost, and the
/// truncated age space.
#[derive(Debug, Clone)]
pub struct SubproblemModel {
    p: f64,
    cost: f64,
    x_max: u64,
}

/// Builds the sub-problem MDP.
///
/// Transitions (ages clipped at `x_max`):
///
/// * from (x, λ) under idle: to (x+1, 1) w.p. p, (x+1, 0) w.p. 1−p;
/// * from (x, 1) under update: to (1, 1) w.p. p, (1, 0) w.p. 1−p;
/// * from (x, 0) under update: same as idle (nothing to transmit).
///
/// Immediate cost: the resulting age x + 1 − x·a·λ, plus C when updating.
pub fn build_subproblem(p: f64, cost: f64, x_max: u64) -> Result<SubproblemModel> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability { value: p });
    }
    if x_max < 10 {
        return Err(Error::TruncationTooSmall {
            x_max,
            reason: "need at least 10 age levels".into(),
        });
    }
    Ok(SubproblemModel { p, cost, x_max })
}

impl SubproblemModel {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    pub fn num_states(&self) -> usize {
        2 * self.x_max as usize
    }

    /// State index of (x, λ).
    pub fn state_index(&self, x: u64, arrival: ArrivalFlag) -> usize {
        assert!((1..=self.x_max).contains(&x));
        (x - 1) as usize * 2 + arrival.as_u8() as usize
    }

    /// Inverse of [`state_index`](Self::state_index).
    pub fn state_of(&self, index: usize) -> (u64, ArrivalFlag) {
        let x = index as u64 / 2 + 1;
        let arrival = ArrivalFlag::from_bool(index % 2 == 1);
        (x, arrival)
    }
}

impl FiniteMdp for SubproblemModel {
    fn num_states(&self) -> usize {
        self.num_states()
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn cost(&self, state: usize, action: usize) -> f64 {
        let (x, arrival) = self.state_of(state);
        let resets = action == UPDATE as usize && arrival.is_present();
        let next_age = if resets { 1 } else { x + 1 };
        next_age as f64
            + if action == UPDATE as usize {
                self.cost
            } else {
                0.0
            }
    }

    fn for_each_successor(&self, state: usize, action: usize, mut f: impl FnMut(usize, f64)) {
        let (x, arrival) = self.state_of(state);
        let resets = action == UPDATE as usize && arrival.is_present();
        let next_age = if resets { 1 } else { (x + 1).min(self.x_max) };
        f(self.state_index(next_age, ArrivalFlag::Present), self.p);
        if self.p < 1.0 {
            f(self.state_index(next_age, ArrivalFlag::Absent), 1.0 - self.p);
        }
    }
}

/// Average-cost solution of the sub-problem by relative value iteration,
/// anchored at reference state (1, 1).
pub fn relative_value_iteration(
    model: &SubproblemModel,
    tolerance: f64,
    max_iterations: usize,
) -> Result<SolvedPolicy> {
    let reference = model.state_index(1, ArrivalFlag::Present);
    solver::solve_average_cost(model, tolerance, max_iterations, reference)
}

/// Discounted solution of the sub-problem, same reference state.
pub fn discounted_value_iteration(
    model: &SubproblemModel,
    config: DiscountedSolverConfig,
) -> Result<SolvedPolicy> {
    let reference = model.state_index(1, ArrivalFlag::Present);
    solver::solve_discounted(model, config, reference)
}

/// Reads the threshold off a solved sub-problem policy after verifying its
/// shape: idle at every (x, 0); for λ = 1 the update region is an upward
/// closed set of ages. A policy violating either is a structural error and
/// would falsify the threshold-optimality result. The threshold must also
/// sit below x_max/2, otherwise the truncation is too small to trust.
pub fn extract_threshold(model: &SubproblemModel, policy: &SolvedPolicy) -> Result<u64> {
    assert_eq!(policy.num_states(), model.num_states());
    let mut threshold = None;
    for x in 1..=model.x_max() {
        if policy.action(model.state_index(x, ArrivalFlag::Absent)) != IDLE {
            return Err(Error::NonThresholdPolicy {
                reason: format!("updates at ({x}, 0), where there is nothing to send"),
            });
        }
        let updates = policy.action(model.state_index(x, ArrivalFlag::Present)) == UPDATE;
        match (threshold, updates) {
            (None, true) => threshold = Some(x),
            (Some(t), false) => {
                return Err(Error::NonThresholdPolicy {
                    reason: format!("updates at ({t}, 1) but idles at ({x}, 1)"),
                });
            }
            _ => {}
        }
    }
    let threshold = threshold.ok_or_else(|| Error::TruncationTooSmall {
        x_max: model.x_max(),
        reason: "policy never updates inside the truncated age space".into(),
    })?;
    if threshold >= model.x_max() / 2 {
        return Err(Error::TruncationTooSmall {
            x_max: model.x_max(),
            reason: format!("threshold {threshold} is not below x_max/2"),
        });
    }
    Ok(threshold)
}

/// Renders a solved sub-problem policy as one `x lambda action` line per
/// state, ages ascending, λ = 0 before λ = 1.
pub fn dump_policy_table(model: &SubproblemModel, policy: &SolvedPolicy) -> String {
    assert_eq!(policy.num_states(), model.num_states());
    let mut out = String::new();
    for x in 1..=model.x_max() {
        for arrival in [ArrivalFlag::Absent, ArrivalFlag::Present] {
            let action = policy.action(model.state_index(x, arrival));
            out.push_str(&format!("{x} {arrival} {action}\n"));
        }
    }
    out
}

/// Parses the [`dump_policy_table`] format back into (x, λ, action) rows.
pub fn parse_policy_table(text: &str) -> Result<Vec<(u64, ArrivalFlag, u8)>> {
    let mut rows = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |part: Option<&str>| -> Result<u64> {
            part.ok_or_else(|| Error::Config(format!("policy table line {}: too few fields", number + 1)))?
                .parse()
                .map_err(|_| Error::Config(format!("policy table line {}: not an integer", number + 1)))
        };
        let x = parse(parts.next())?;
        let lambda = parse(parts.next())?;
        let action = parse(parts.next())?;
        if lambda > 1 || action > 1 || x == 0 {
            return Err(Error::Config(format!(
                "policy table line {}: out-of-range field",
                number + 1
            )));
        }
        rows.push((x, ArrivalFlag::from_bool(lambda == 1), action as u8));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whittle::{average_cost, optimal_threshold, SubproblemParams};

    fn solve(p: f64, cost: f64, x_max: u64) -> (SubproblemModel, SolvedPolicy) {
        let model = build_subproblem(p, cost, x_max).unwrap();
        let policy = relative_value_iteration(&model, 1e-9, 200_000).unwrap();
        (model, policy)
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let model = build_subproblem(0.3, 2.0, 30).unwrap();
        for state in 0..model.num_states() {
            for action in 0..2 {
                let mut total = 0.0;
                model.for_each_successor(state, action, |_, p| total += p);
                assert!((total - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn update_with_arrival_resets_age() {
        let model = build_subproblem(0.3, 2.0, 30).unwrap();
        let state = model.state_index(17, ArrivalFlag::Present);
        let mut successors = Vec::new();
        model.for_each_successor(state, UPDATE as usize, |s, p| successors.push((s, p)));
        assert_eq!(
            successors,
            vec![
                (model.state_index(1, ArrivalFlag::Present), 0.3),
                (model.state_index(1, ArrivalFlag::Absent), 0.7),
            ]
        );
    }

    #[test]
    fn update_without_arrival_matches_idle() {
        let model = build_subproblem(0.3, 2.0, 30).unwrap();
        let state = model.state_index(17, ArrivalFlag::Absent);
        let mut upd = Vec::new();
        let mut idle = Vec::new();
        model.for_each_successor(state, UPDATE as usize, |s, p| upd.push((s, p)));
        model.for_each_successor(state, IDLE as usize, |s, p| idle.push((s, p)));
        assert_eq!(upd, idle);
    }

    #[test]
    fn immediate_costs_follow_the_formula() {
        let model = build_subproblem(0.3, 2.5, 30).unwrap();
        let s_arrival = model.state_index(9, ArrivalFlag::Present);
        let s_empty = model.state_index(9, ArrivalFlag::Absent);
        assert_eq!(FiniteMdp::cost(&model, s_arrival, UPDATE as usize), 1.0 + 2.5);
        assert_eq!(FiniteMdp::cost(&model, s_arrival, IDLE as usize), 10.0);
        assert_eq!(FiniteMdp::cost(&model, s_empty, IDLE as usize), 10.0);
        assert_eq!(FiniteMdp::cost(&model, s_empty, UPDATE as usize), 10.0 + 2.5);
    }

    #[test]
    fn certain_arrivals_zero_cost_updates_always() {
        let (model, policy) = solve(1.0, 0.0, 50);
        assert!((policy.gain - 1.0).abs() <= 1e-6, "gain {}", policy.gain);
        for x in 1..=50 {
            assert_eq!(policy.action(model.state_index(x, ArrivalFlag::Present)), UPDATE);
        }
        assert_eq!(extract_threshold(&model, &policy).unwrap(), 1);
    }

    #[test]
    fn half_arrivals_cost_five_reaches_the_tied_optimum() {
        let (model, policy) = solve(0.5, 5.0, 200);
        // C = 5 ties thresholds 2 and 3; both give average cost 4.
        let expected = average_cost(3, SubproblemParams::new(0.5, 5.0).unwrap());
        assert_eq!(expected, 4.0);
        assert!(
            (policy.gain - expected).abs() <= 1e-6,
            "gain {} vs {expected}",
            policy.gain
        );
        assert_eq!(extract_threshold(&model, &policy).unwrap(), 3);
    }

    #[test]
    fn gain_matches_closed_form_on_a_coarse_grid() {
        for &p in &[0.2, 0.5, 0.8, 1.0] {
            for &cost in &[0.0, 1.0, 7.0, 30.0] {
                let (model, policy) = solve(p, cost, 150);
                let best = (1..=150)
                    .map(|x| average_cost(x, SubproblemParams::new(p, cost).unwrap()))
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    (policy.gain - best).abs() <= 1e-5,
                    "p={p} C={cost}: gain {} vs {best}",
                    policy.gain
                );
                let threshold = extract_threshold(&model, &policy).unwrap();
                let closed = optimal_threshold(SubproblemParams::new(p, cost).unwrap()).unwrap();
                assert_eq!(threshold, closed, "p={p} C={cost}");
            }
        }
    }

    #[test]
    fn gain_monotone_in_cost_and_arrival_probability() {
        let gains: Vec<f64> = [0.0, 2.0, 8.0, 20.0]
            .iter()
            .map(|&c| solve(0.4, c, 150).1.gain)
            .collect();
        assert!(gains.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{gains:?}");
        let gains: Vec<f64> = [0.2, 0.4, 0.7, 1.0]
            .iter()
            .map(|&p| solve(p, 5.0, 150).1.gain)
            .collect();
        assert!(gains.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{gains:?}");
    }

    #[test]
    fn myopic_discount_updates_when_age_reaches_cost() {
        let model = build_subproblem(0.5, 5.0, 50).unwrap();
        let config = DiscountedSolverConfig::new(1e-6, 1e-12, 10_000).unwrap();
        let policy = discounted_value_iteration(&model, config).unwrap();
        for x in 1..=50 {
            let expected = if x as f64 >= 5.0 { UPDATE } else { IDLE };
            assert_eq!(
                policy.action(model.state_index(x, ArrivalFlag::Present)),
                expected,
                "myopic action at ({x}, 1)"
            );
            assert_eq!(policy.action(model.state_index(x, ArrivalFlag::Absent)), IDLE);
        }
    }

    #[test]
    fn discounted_values_nondecreasing_in_age() {
        let model = build_subproblem(0.3, 4.0, 80).unwrap();
        let config = DiscountedSolverConfig::new(0.95, 1e-10, 100_000).unwrap();
        let policy = discounted_value_iteration(&model, config).unwrap();
        for arrival in [ArrivalFlag::Absent, ArrivalFlag::Present] {
            for x in 1..80 {
                let lo = policy.values()[model.state_index(x, arrival)];
                let hi = policy.values()[model.state_index(x + 1, arrival)];
                assert!(hi >= lo - 1e-9, "J({x}, {arrival}) decreasing: {lo} -> {hi}");
            }
        }
    }

    #[test]
    fn near_undiscounted_policy_matches_average_cost_threshold() {
        let model = build_subproblem(0.5, 5.0, 100).unwrap();
        let config = DiscountedSolverConfig::new(0.999, 1e-9, 200_000).unwrap();
        let policy = discounted_value_iteration(&model, config).unwrap();
        assert_eq!(extract_threshold(&model, &policy).unwrap(), 3);
    }

    #[test]
    fn discounted_threshold_nondecreasing_in_cost() {
        let model_of = |c| build_subproblem(0.4, c, 100).unwrap();
        let config = DiscountedSolverConfig::new(0.99, 1e-10, 100_000).unwrap();
        let mut last = 0;
        for &cost in &[0.0, 1.0, 3.0, 8.0, 15.0] {
            let model = model_of(cost);
            let policy = discounted_value_iteration(&model, config).unwrap();
            let threshold = extract_threshold(&model, &policy).unwrap();
            assert!(threshold >= last, "threshold dropped at C={cost}");
            last = threshold;
        }
    }

    #[test]
    fn non_threshold_policy_is_rejected() {
        let model = build_subproblem(0.5, 1.0, 20).unwrap();
        let policy = relative_value_iteration(&model, 1e-8, 100_000).unwrap();
        // Corrupt the table: update at (x, 1) for small x, idle above.
        let mut broken = policy.clone();
        broken.actions[model.state_index(1, ArrivalFlag::Present)] = UPDATE;
        broken.actions[model.state_index(5, ArrivalFlag::Present)] = IDLE;
        for x in 6..=20 {
            broken.actions[model.state_index(x, ArrivalFlag::Present)] = UPDATE;
        }
        assert!(matches!(
            extract_threshold(&model, &broken),
            Err(Error::NonThresholdPolicy { .. })
        ));
        // Updating on an empty slot is also not threshold-shaped.
        let mut wasteful = policy.clone();
        wasteful.actions[model.state_index(3, ArrivalFlag::Absent)] = UPDATE;
        assert!(matches!(
            extract_threshold(&model, &wasteful),
            Err(Error::NonThresholdPolicy { .. })
        ));
    }

    #[test]
    fn threshold_too_close_to_truncation_is_reported() {
        // C large enough to push the threshold past x_max/2 = 10.
        let model = build_subproblem(0.5, 200.0, 20).unwrap();
        let policy = relative_value_iteration(&model, 1e-8, 100_000).unwrap();
        assert!(matches!(
            extract_threshold(&model, &policy),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn policy_table_round_trips() {
        let (model, policy) = solve(0.5, 5.0, 12);
        let table = dump_policy_table(&model, &policy);
        let rows = parse_policy_table(&table).unwrap();
        assert_eq!(rows.len(), model.num_states());
        for (x, arrival, action) in rows {
            assert_eq!(policy.action(model.state_index(x, arrival)), action);
        }
        assert!(parse_policy_table("1 2 0\n").is_err());
        assert!(parse_policy_table("1 0\n").is_err());
    }
}
