//! Closed-form quantities of the decoupled single-user problem: the
//! threshold-policy average cost, the Whittle index, the optimal-threshold
//! map, and the indexability sweep.
//!
//! The single-user sub-problem charges the usual age cost plus an extra cost
//! C per update. Under a threshold policy (update exactly when an arrival is
//! present and the age is at least the threshold) the average cost has the
//! closed form implemented by [`average_cost`]. The Whittle index of a state
//! is the value of C at which updating and idling are equally desirable
//! there; [`whittle_index`] gives it in closed form, and [`optimal_threshold`]
//! inverts the index into the cost-to-threshold map.

use crate::error::Error;
use crate::types::{Age, ArrivalFlag};
use crate::Result;

/// Parameters of the decoupled single-user problem: arrival probability
/// p in (0, 1] and update cost C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemParams {
    p: f64,
    cost: f64,
}

impl SubproblemParams {
    pub fn new(p: f64, cost: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability { value: p });
        }
        Ok(SubproblemParams { p, cost })
    }

    pub fn p(self) -> f64 {
        self.p
    }

    pub fn cost(self) -> f64 {
        self.cost
    }
}

/// Average cost per slot of the threshold policy with threshold `x_bar`:
///
/// ```text
/// ( x̄²/2 + (1/p − 1/2)·x̄ + 1/p² − 1/p + C ) / ( x̄ + (1−p)/p )
/// ```
///
/// evaluated exactly as written. `dtmc::dtmc_average_cost` reaches the same
/// value by summing the post-action stationary distribution and serves as an
/// independent check.
pub fn average_cost(threshold: u64, params: SubproblemParams) -> f64 {
    assert!(threshold >= 1, "threshold must be at least 1");
    let x_bar = threshold as f64;
    let p = params.p;
    let numerator =
        x_bar * x_bar / 2.0 + (1.0 / p - 0.5) * x_bar + 1.0 / (p * p) - 1.0 / p + params.cost;
    let denominator = x_bar + (1.0 - p) / p;
    numerator / denominator
}

/// The Whittle index of state (x, λ):
///
/// ```text
/// I(x, λ) = 0                     if λ = 0
///           x²/2 − x/2 + x/p     if λ = 1
/// ```
///
/// With an arrival present, this is the update cost C at which the threshold
/// policies x and x + 1 have equal average cost; without an arrival an
/// update moves nothing, so the state is indifferent already at C = 0.
pub fn whittle_index(age: Age, arrival: ArrivalFlag, p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 1.0, "p must be in (0, 1], got {p}");
    match arrival {
        ArrivalFlag::Absent => 0.0,
        ArrivalFlag::Present => {
            let x = age.get() as f64;
            x * x / 2.0 - x / 2.0 + x / p
        }
    }
}

/// Index of the arrival state (x, 1), with the convention I(0, 1) = 0 that
/// closes the threshold map at x = 1.
fn arrival_index(x: u64, p: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        whittle_index(Age::new(x), ArrivalFlag::Present, p)
    }
}

/// The cost-optimal threshold: the unique x ≥ 1 with
/// I(x−1, 1) ≤ C < I(x, 1).
///
/// At a boundary C = I(x−1, 1) both thresholds x−1 and x are optimal; the
/// tie is broken in favor of idling, i.e. the larger threshold. Negative
/// costs are rejected: the threshold structure is only established for
/// C ≥ 0.
pub fn optimal_threshold(params: SubproblemParams) -> Result<u64> {
    let cost = params.cost;
    if cost < 0.0 || cost.is_nan() {
        return Err(Error::NegativeCost { value: cost });
    }
    let p = params.p;
    // I(x, 1) is a quadratic in x; start the scan just below its root.
    let b = 2.0 / p - 1.0;
    let root = (-b + (b * b + 8.0 * cost).sqrt()) / 2.0;
    let mut x = (root.floor().max(0.0) as u64).saturating_sub(2).max(1);
    while x > 1 && arrival_index(x - 1, p) > cost {
        x -= 1;
    }
    while arrival_index(x, p) <= cost {
        x += 1;
    }
    debug_assert!(arrival_index(x - 1, p) <= cost);
    Ok(x)
}

/// Precomputed Whittle index values I(x, 1) for x = 1..=cap, for one user.
///
/// I(x, 0) is identically zero and is not stored. The constructor checks the
/// strict monotonicity of the stored entries.
#[derive(Debug, Clone)]
pub struct IndexTable {
    p: f64,
    values: Vec<f64>,
}

impl IndexTable {
    pub fn new(p: f64, cap: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability { value: p });
        }
        let values: Vec<f64> = (1..=cap)
            .map(|x| whittle_index(Age::new(x), ArrivalFlag::Present, p))
            .collect();
        assert!(
            values.windows(2).all(|w| w[0] < w[1]),
            "index values must be strictly increasing in age"
        );
        Ok(IndexTable { p, values })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn cap(&self) -> u64 {
        self.values.len() as u64
    }

    /// I(x, λ). Ages above the table cap fall back to the closed form.
    pub fn get(&self, age: Age, arrival: ArrivalFlag) -> f64 {
        if !arrival.is_present() {
            return 0.0;
        }
        match self.values.get(age.get() as usize - 1) {
            Some(&v) => v,
            None => whittle_index(age, arrival, self.p),
        }
    }

    /// The threshold map C ↦ X̄* at this table's arrival probability.
    pub fn threshold_for_cost(&self, cost: f64) -> Result<u64> {
        optimal_threshold(SubproblemParams::new(self.p, cost)?)
    }
}

/// The set of states where idling is optimal at a given update cost:
/// every (x, 0) state, plus the arrival states (x, 1) with x below the
/// optimal threshold. Reported up to `age_cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdleSet {
    threshold: u64,
    age_cap: u64,
}

impl IdleSet {
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn contains(&self, x: u64, arrival: ArrivalFlag) -> bool {
        if x < 1 || x > self.age_cap {
            return false;
        }
        match arrival {
            ArrivalFlag::Absent => true,
            ArrivalFlag::Present => x < self.threshold,
        }
    }

    pub fn is_subset_of(&self, other: &IdleSet) -> bool {
        self.age_cap == other.age_cap && self.threshold <= other.threshold
    }

    /// Explicit members as (age, flag) pairs, for direct set comparisons.
    pub fn materialize(&self) -> std::collections::BTreeSet<(u64, u8)> {
        let mut set = std::collections::BTreeSet::new();
        for x in 1..=self.age_cap {
            set.insert((x, 0));
            if x < self.threshold {
                set.insert((x, 1));
            }
        }
        set
    }
}

/// Idle sets along an ascending cost grid. Indexability is the statement
/// that these sets are nested ascending, which the returned sequence makes
/// directly checkable.
pub fn indexability_sweep(p: f64, cost_grid: &[f64], age_cap: u64) -> Result<Vec<IdleSet>> {
    assert!(
        cost_grid.windows(2).all(|w| w[0] <= w[1]),
        "cost grid must be ascending"
    );
    cost_grid
        .iter()
        .map(|&cost| {
            let threshold = optimal_threshold(SubproblemParams::new(p, cost)?)?;
            Ok(IdleSet { threshold, age_cap })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, cost: f64) -> SubproblemParams {
        SubproblemParams::new(p, cost).unwrap()
    }

    fn index_at(x: u64, p: f64) -> f64 {
        whittle_index(Age::new(x), ArrivalFlag::Present, p)
    }

    /// Exhaustive minimization of the threshold cost formula, breaking ties
    /// in favor of the larger threshold (more idling).
    fn brute_force_threshold(p: f64, cost: f64, x_cap: u64) -> u64 {
        let pr = params(p, cost);
        let costs: Vec<f64> = (1..=x_cap).map(|x| average_cost(x, pr)).collect();
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let window = 1e-9 * min.abs().max(1.0);
        (1..=x_cap)
            .rev()
            .find(|&x| costs[x as usize - 1] <= min + window)
            .unwrap()
    }

    #[test]
    fn average_cost_known_values() {
        // Deterministic arrivals, always update, zero cost: age is always 1.
        assert_eq!(average_cost(1, params(1.0, 0.0)), 1.0);
        assert_eq!(average_cost(1, params(0.5, 0.0)), 2.0);
        assert_eq!(average_cost(2, params(0.5, 5.0)), 4.0);
    }

    #[test]
    fn whittle_index_known_values() {
        assert_eq!(whittle_index(Age::new(7), ArrivalFlag::Absent, 0.3), 0.0);
        assert_eq!(index_at(1, 1.0), 1.0);
        assert_eq!(index_at(2, 0.5), 5.0);
    }

    #[test]
    fn optimal_threshold_known_values() {
        assert_eq!(optimal_threshold(params(1.0, 0.0)).unwrap(), 1);
        // C = 5 ties the index at x = 2; the tie goes to idling, so 3.
        assert_eq!(optimal_threshold(params(0.5, 5.0)).unwrap(), 3);
    }

    #[test]
    fn negative_cost_rejected() {
        assert!(matches!(
            optimal_threshold(params(0.5, -1.0)),
            Err(Error::NegativeCost { .. })
        ));
    }

    #[test]
    fn threshold_matches_exhaustive_minimization_on_grid() {
        for pi in 1..=10 {
            let p = pi as f64 / 10.0;
            for ci in 0..=50 {
                let cost = ci as f64 * 0.5;
                let closed = optimal_threshold(params(p, cost)).unwrap();
                let brute = brute_force_threshold(p, cost, 200);
                assert_eq!(
                    closed, brute,
                    "threshold mismatch at p={p}, C={cost}: closed {closed}, brute {brute}"
                );
            }
        }
    }

    #[test]
    fn index_table_agrees_with_closed_form() {
        let table = IndexTable::new(0.3, 50).unwrap();
        for x in 1..=60 {
            let age = Age::new(x);
            assert_eq!(
                table.get(age, ArrivalFlag::Present),
                index_at(x, 0.3),
                "table and closed form differ at x={x}"
            );
            assert_eq!(table.get(age, ArrivalFlag::Absent), 0.0);
        }
        assert_eq!(table.threshold_for_cost(5.0).unwrap(), 2);
    }

    #[test]
    fn sweep_at_zero_cost_has_no_arrival_states() {
        let sets = indexability_sweep(0.5, &[0.0], 30).unwrap();
        assert_eq!(sets[0].threshold(), 1);
        for x in 1..=30 {
            assert!(!sets[0].contains(x, ArrivalFlag::Present));
            assert!(sets[0].contains(x, ArrivalFlag::Absent));
        }
    }

    #[test]
    fn sweep_sets_are_nested_ascending() {
        let grid: Vec<f64> = (0..=50).map(|c| c as f64).collect();
        for &p in &[0.2, 0.5, 0.9] {
            let sets = indexability_sweep(p, &grid, 100).unwrap();
            for w in sets.windows(2) {
                assert!(w[0].is_subset_of(&w[1]), "sets not nested at p={p}");
                let (a, b) = (w[0].materialize(), w[1].materialize());
                assert!(a.is_subset(&b), "materialized sets not nested at p={p}");
            }
        }
    }

    proptest! {
        #[test]
        fn index_strictly_increasing_in_age(x in 1u64..500, p in 0.01f64..=1.0) {
            prop_assert!(index_at(x + 1, p) > index_at(x, p));
        }

        #[test]
        fn index_nonincreasing_in_p(x in 1u64..500, pa in 0.01f64..1.0, pb in 0.01f64..1.0) {
            let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
            prop_assert!(index_at(x, hi) <= index_at(x, lo));
        }

        #[test]
        fn threshold_cost_strictly_convex(x in 1u64..1000, p in 0.01f64..=1.0, cost in 0.0f64..100.0) {
            let pr = params(p, cost);
            let second_difference =
                average_cost(x + 2, pr) - 2.0 * average_cost(x + 1, pr) + average_cost(x, pr);
            prop_assert!(
                second_difference > 0.0,
                "second difference {second_difference} at x={x}, p={p}, C={cost}"
            );
        }

        #[test]
        fn equal_desirability_at_the_index(x in 1u64..200, p in 0.01f64..=1.0) {
            // C = I(x, 1) is by definition the cost at which thresholds
            // x and x + 1 are equally good.
            let c = index_at(x, p);
            let pr = params(p, c);
            let diff = (average_cost(x, pr) - average_cost(x + 1, pr)).abs();
            prop_assert!(diff <= 1e-9, "cost gap {diff} at x={x}, p={p}");
        }

        #[test]
        fn threshold_nondecreasing_in_cost(p in 0.01f64..=1.0, c in 0.0f64..200.0, dc in 0.0f64..50.0) {
            let lo = optimal_threshold(params(p, c)).unwrap();
            let hi = optimal_threshold(params(p, c + dc)).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn threshold_is_exact_between_indices(x in 1u64..100, p in 0.01f64..=1.0, t in 0.05f64..0.95) {
            // Any cost strictly between I(x-1, 1) and I(x, 1) maps to x.
            let lo = arrival_index(x - 1, p);
            let hi = arrival_index(x, p);
            let c = lo + t * (hi - lo);
            prop_assume!(c > lo && c < hi);
            prop_assert_eq!(optimal_threshold(params(p, c)).unwrap(), x);
        }
    }
}
