//! Cross-check suites behind `aoi verify`: each check pits a closed form
//! against an independent route to the same quantity and reports the worst
//! residual it saw.

use crate::dtmc::dtmc_average_cost;
use crate::mdp::{build_subproblem, extract_threshold, relative_value_iteration};
use crate::types::{Age, ArrivalFlag};
use crate::whittle::{
    average_cost, indexability_sweep, optimal_threshold, whittle_index, SubproblemParams,
};
use crate::Result;

/// Grid sizes for the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyGrid {
    /// Coarse grid, runs in well under a second.
    Small,
    /// The full verification grid: p ∈ {0.1, ..., 1.0},
    /// C ∈ {0, 0.5, ..., 25}, sub-problems truncated at 200.
    Full,
}

struct GridSpec {
    ps: Vec<f64>,
    costs: Vec<f64>,
    thresholds: std::ops::RangeInclusive<u64>,
    x_max: u64,
    tolerance: f64,
}

impl VerifyGrid {
    fn spec(self) -> GridSpec {
        match self {
            VerifyGrid::Small => GridSpec {
                ps: vec![0.2, 0.5, 0.8, 1.0],
                costs: (0..=10).map(|c| c as f64).collect(),
                thresholds: 1..=20,
                x_max: 100,
                tolerance: 1e-8,
            },
            VerifyGrid::Full => GridSpec {
                ps: (1..=10).map(|i| i as f64 / 10.0).collect(),
                costs: (0..=50).map(|c| c as f64 * 0.5).collect(),
                thresholds: 1..=50,
                x_max: 200,
                tolerance: 1e-9,
            },
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual observed, in the check's own units.
    pub residual: f64,
    pub detail: String,
}

/// All check outcomes of one verification run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Exhaustive minimization of the threshold cost formula over 1..=cap,
/// breaking ties in favor of the larger threshold (more idling). Returns
/// the minimizing threshold and its cost.
pub fn min_average_cost(params: SubproblemParams, cap: u64) -> (u64, f64) {
    let costs: Vec<f64> = (1..=cap).map(|x| average_cost(x, params)).collect();
    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let window = 1e-9 * min.abs().max(1.0);
    let threshold = (1..=cap)
        .rev()
        .find(|&x| costs[x as usize - 1] <= min + window)
        .expect("nonempty scan");
    (threshold, min)
}

/// Worst |𝒞(x) − 𝒞(x+1)| at C = index(x, p) over the given grid, for any
/// candidate index formula. The real index makes both thresholds equally
/// desirable, so the residual should vanish; a wrong formula shows up as a
/// macroscopic residual. Exposed so a known-bad index can be injected as a
/// sanity check of the harness itself.
pub fn equal_desirability_residual(
    index: impl Fn(u64, f64) -> f64,
    ps: &[f64],
    thresholds: std::ops::RangeInclusive<u64>,
) -> f64 {
    let mut worst = 0.0f64;
    for &p in ps {
        for x in thresholds.clone() {
            let c = index(x, p);
            let params = SubproblemParams::new(p, c).expect("valid p");
            let gap = (average_cost(x, params) - average_cost(x + 1, params)).abs();
            worst = worst.max(gap);
        }
    }
    worst
}

fn check_closed_form_consistency(spec: &GridSpec) -> CheckReport {
    let mut worst = 0.0f64;
    for &p in &spec.ps {
        for x in spec.thresholds.clone() {
            for &c in &spec.costs {
                let params = SubproblemParams::new(p, c).expect("valid p");
                let via_formula = average_cost(x, params);
                let via_chain = dtmc_average_cost(p, x, c).expect("valid inputs");
                worst = worst.max((via_formula - via_chain).abs());
            }
        }
    }
    CheckReport {
        name: "closed-form-consistency",
        passed: worst <= 1e-12,
        residual: worst,
        detail: "threshold cost formula vs post-action chain summation".into(),
    }
}

fn check_equal_desirability(spec: &GridSpec) -> CheckReport {
    let residual = equal_desirability_residual(
        |x, p| whittle_index(Age::new(x), ArrivalFlag::Present, p),
        &spec.ps,
        spec.thresholds.clone(),
    );
    CheckReport {
        name: "equal-desirability",
        passed: residual <= 1e-9,
        residual,
        detail: "cost gap between thresholds x and x+1 at C = I(x, 1)".into(),
    }
}

fn check_rvi_oracle_agreement(spec: &GridSpec) -> Result<CheckReport> {
    let mut worst_gain_gap = 0.0f64;
    for &p in &spec.ps {
        for &c in &spec.costs {
            let model = build_subproblem(p, c, spec.x_max)?;
            let policy = relative_value_iteration(&model, spec.tolerance, 500_000)?;
            let solved_threshold = extract_threshold(&model, &policy)?;
            let params = SubproblemParams::new(p, c)?;
            let closed_threshold = optimal_threshold(params)?;
            if solved_threshold != closed_threshold {
                return Ok(CheckReport {
                    name: "rvi-oracle-agreement",
                    passed: false,
                    residual: (solved_threshold as f64 - closed_threshold as f64).abs(),
                    detail: format!(
                        "threshold mismatch at p={p}, C={c}: solver {solved_threshold}, closed form {closed_threshold}"
                    ),
                });
            }
            let (_, best) = min_average_cost(params, 150);
            worst_gain_gap = worst_gain_gap.max((policy.gain - best).abs());
        }
    }
    Ok(CheckReport {
        name: "rvi-oracle-agreement",
        passed: worst_gain_gap <= 1e-5,
        residual: worst_gain_gap,
        detail: "value-iteration thresholds and gains vs the closed forms".into(),
    })
}

fn check_indexability(spec: &GridSpec) -> Result<CheckReport> {
    let grid: Vec<f64> = (0..=50).map(|c| c as f64).collect();
    for &p in &spec.ps {
        let sets = indexability_sweep(p, &grid, 200)?;
        for (i, pair) in sets.windows(2).enumerate() {
            if !pair[0].is_subset_of(&pair[1]) {
                return Ok(CheckReport {
                    name: "indexability-nesting",
                    passed: false,
                    residual: 1.0,
                    detail: format!("idle sets not nested between C={} and C={} at p={p}", i, i + 1),
                });
            }
        }
    }
    Ok(CheckReport {
        name: "indexability-nesting",
        passed: true,
        residual: 0.0,
        detail: "idle sets grow monotonically along the cost grid".into(),
    })
}

/// Runs the four cross-check suites on the chosen grid.
pub fn verify(grid: VerifyGrid) -> Result<VerifyReport> {
    let spec = grid.spec();
    let checks = vec![
        check_closed_form_consistency(&spec),
        check_equal_desirability(&spec),
        check_rvi_oracle_agreement(&spec)?,
        check_indexability(&spec)?,
    ];
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_passes_every_check() {
        let report = verify(VerifyGrid::Small).unwrap();
        assert_eq!(report.checks.len(), 4);
        for check in &report.checks {
            assert!(check.passed, "{} failed: {}", check.name, check.detail);
        }
    }

    #[test]
    fn deterministic_arrivals_are_part_of_the_grid() {
        // p = 1 exercises the periodic-chain edge; the suite must include it
        for grid in [VerifyGrid::Small, VerifyGrid::Full] {
            assert!(grid.spec().ps.contains(&1.0));
        }
    }

    #[test]
    fn wrong_index_formula_is_caught() {
        // flip the sign of the linear term: the equal-desirability property
        // must break by a macroscopic margin
        let residual = equal_desirability_residual(
            |x, p| {
                let x = x as f64;
                x * x / 2.0 + x / 2.0 + x / p
            },
            &[0.5],
            1..=20,
        );
        assert!(residual > 1e-3, "mutated index slipped through: {residual}");
    }

    #[test]
    fn brute_force_minimizer_reports_the_idle_favoring_tie() {
        // C = 5 at p = 0.5 ties thresholds 2 and 3
        let params = SubproblemParams::new(0.5, 5.0).unwrap();
        let (threshold, best) = min_average_cost(params, 100);
        assert_eq!(threshold, 3);
        assert_eq!(best, 4.0);
    }
}
