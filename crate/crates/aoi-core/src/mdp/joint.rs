//! Brute-force age-optimal benchmark: the joint N-user scheduling problem
//! solved as one average-cost MDP. Only viable at desk scale (the state
//! space is (2·x_max)^N), which is all the benchmark needs.

use crate::error::Error;
use crate::types::{ArrivalFlag, Decision};
use crate::Result;

use super::solver::{self, FiniteMdp};

/// Hard cap on the joint state-space size.
pub const JOINT_STATE_CAP: u64 = 4_000_000;

/// Joint model over per-user (age, arrival) pairs with one update per slot.
#[derive(Debug, Clone)]
pub struct JointModel {
    ps: Vec<f64>,
    x_max: u64,
}

impl JointModel {
    pub fn new(ps: Vec<f64>, x_max: u64) -> Result<Self> {
        for &p in &ps {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidProbability { value: p });
            }
        }
        let n = ps.len();
        if n == 0 || n > 3 {
            return Err(Error::Config(format!(
                "joint model supports 1 to 3 users, got {n}"
            )));
        }
        if !(2..=60).contains(&x_max) {
            return Err(Error::TruncationTooSmall {
                x_max,
                reason: "joint truncation must be in 2..=60".into(),
            });
        }
        let states = (2 * x_max).pow(n as u32);
        if states > JOINT_STATE_CAP {
            return Err(Error::StateSpaceTooLarge {
                states,
                cap: JOINT_STATE_CAP,
            });
        }
        Ok(JointModel { ps, x_max })
    }

    pub fn num_users(&self) -> usize {
        self.ps.len()
    }

    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    fn radix(&self) -> usize {
        2 * self.x_max as usize
    }

    /// Mixed-radix state index over per-user (age − 1)·2 + λ digits.
    pub fn state_index(&self, ages: &[u64], arrivals: &[ArrivalFlag]) -> usize {
        assert_eq!(ages.len(), self.ps.len());
        assert_eq!(arrivals.len(), self.ps.len());
        let radix = self.radix();
        let mut index = 0usize;
        for (&x, &flag) in ages.iter().zip(arrivals) {
            let x = x.clamp(1, self.x_max);
            index = index * radix + (x as usize - 1) * 2 + flag.as_u8() as usize;
        }
        index
    }

    fn decode(&self, mut index: usize) -> (Vec<u64>, Vec<ArrivalFlag>) {
        let n = self.ps.len();
        let radix = self.radix();
        let mut ages = vec![0u64; n];
        let mut arrivals = vec![ArrivalFlag::Absent; n];
        for i in (0..n).rev() {
            let digit = index % radix;
            index /= radix;
            ages[i] = digit as u64 / 2 + 1;
            arrivals[i] = ArrivalFlag::from_bool(digit % 2 == 1);
        }
        (ages, arrivals)
    }

    /// Next ages are deterministic given the decision: the targeted user
    /// resets to 1 if it has an arrival, everyone else increments (clipped).
    fn next_ages(&self, ages: &[u64], arrivals: &[ArrivalFlag], action: usize) -> Vec<u64> {
        ages.iter()
            .enumerate()
            .map(|(i, &x)| {
                if action == i + 1 && arrivals[i].is_present() {
                    1
                } else {
                    (x + 1).min(self.x_max)
                }
            })
            .collect()
    }
}

impl FiniteMdp for JointModel {
    fn num_states(&self) -> usize {
        self.radix().pow(self.ps.len() as u32)
    }

    fn num_actions(&self) -> usize {
        self.ps.len() + 1
    }

    /// Per-slot cost: the resulting ages summed, the per-user resulting-age
    /// cost with zero update charge.
    fn cost(&self, state: usize, action: usize) -> f64 {
        let (ages, arrivals) = self.decode(state);
        ages.iter()
            .enumerate()
            .map(|(i, &x)| {
                if action == i + 1 && arrivals[i].is_present() {
                    1.0
                } else {
                    (x + 1) as f64
                }
            })
            .sum()
    }

    fn for_each_successor(&self, state: usize, action: usize, mut f: impl FnMut(usize, f64)) {
        let (ages, arrivals) = self.decode(state);
        let next = self.next_ages(&ages, &arrivals, action);
        let n = self.ps.len();
        // enumerate the 2^N next arrival patterns
        let mut flags = vec![ArrivalFlag::Absent; n];
        for mask in 0..(1usize << n) {
            let mut prob = 1.0;
            for (i, flag) in flags.iter_mut().enumerate() {
                let present = mask & (1 << i) != 0;
                *flag = ArrivalFlag::from_bool(present);
                prob *= if present { self.ps[i] } else { 1.0 - self.ps[i] };
            }
            if prob > 0.0 {
                f(self.state_index(&next, &flags), prob);
            }
        }
    }
}

/// Greedy decision table from the solved joint model, usable as a simulator
/// scheduler. Ages above the solve truncation clamp to it on lookup.
#[derive(Debug, Clone)]
pub struct JointPolicy {
    model: JointModel,
    actions: Vec<u8>,
    gain: f64,
}

impl JointPolicy {
    /// Average total age per slot under the greedy table.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn num_users(&self) -> usize {
        self.model.num_users()
    }

    pub fn x_max(&self) -> u64 {
        self.model.x_max()
    }

    pub fn decide(&self, ages: &[u64], arrivals: &[ArrivalFlag]) -> Decision {
        let index = self.model.state_index(ages, arrivals);
        Decision::from_code(self.actions[index] as usize, self.model.num_users())
            .expect("action table entries are valid decision codes")
    }

    /// One `x_1 .. x_N lambda_1 .. lambda_N action` line per state, after a
    /// `N x_max` header line.
    pub fn to_table_string(&self) -> String {
        let n = self.model.num_users();
        let mut out = format!("{} {}\n", n, self.model.x_max());
        for index in 0..self.actions.len() {
            let (ages, arrivals) = self.model.decode(index);
            let mut line = String::new();
            for x in &ages {
                line.push_str(&format!("{x} "));
            }
            for flag in &arrivals {
                line.push_str(&format!("{flag} "));
            }
            line.push_str(&format!("{}\n", self.actions[index]));
            out.push_str(&line);
        }
        out
    }

    /// Parses [`to_table_string`](Self::to_table_string) output. The arrival
    /// probabilities are not part of the table; they are only needed to
    /// solve, not to replay a policy.
    pub fn from_table_string(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("joint policy table: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad user count"))?;
        let x_max: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad x_max"))?;
        // placeholder probabilities; only the state geometry matters here
        let model = JointModel::new(vec![1.0; n], x_max)?;
        let mut actions = vec![u8::MAX; model.radix().pow(n as u32)];
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 * n + 1 {
                return Err(bad("wrong field count"));
            }
            let mut ages = Vec::with_capacity(n);
            let mut arrivals = Vec::with_capacity(n);
            for field in &fields[..n] {
                ages.push(field.parse::<u64>().map_err(|_| bad("bad age"))?);
            }
            for field in &fields[n..2 * n] {
                let v: u8 = field.parse().map_err(|_| bad("bad flag"))?;
                if v > 1 {
                    return Err(bad("flag out of range"));
                }
                arrivals.push(ArrivalFlag::from_bool(v == 1));
            }
            let action: u8 = fields[2 * n].parse().map_err(|_| bad("bad action"))?;
            if action as usize > n {
                return Err(bad("action out of range"));
            }
            actions[model.state_index(&ages, &arrivals)] = action;
        }
        if actions.contains(&u8::MAX) {
            return Err(bad("incomplete table"));
        }
        Ok(JointPolicy {
            model,
            actions,
            gain: f64::NAN,
        })
    }
}

/// Solves the joint problem by relative value iteration and returns the
/// greedy decision table with its average total age.
pub fn solve_joint(ps: Vec<f64>, x_max: u64, tolerance: f64) -> Result<JointPolicy> {
    let model = JointModel::new(ps, x_max)?;
    let policy = solver::solve_average_cost(&model, tolerance, 500_000, 0)?;
    Ok(JointPolicy {
        gain: policy.gain,
        actions: policy.actions,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::subproblem::UPDATE;

    #[test]
    fn size_cap_is_enforced() {
        // 120^3 = 1.728e6 stays under the cap
        assert!(JointModel::new(vec![0.5; 3], 60).is_ok());
        assert!(matches!(
            JointModel::new(vec![0.5; 4], 20),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            JointModel::new(vec![0.5; 2], 80),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn joint_rows_sum_to_one() {
        let model = JointModel::new(vec![0.3, 0.8], 6).unwrap();
        for state in 0..FiniteMdp::num_states(&model) {
            for action in 0..FiniteMdp::num_actions(&model) {
                let mut total = 0.0;
                model.for_each_successor(state, action, |_, p| total += p);
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_user_reduces_to_always_update() {
        let policy = solve_joint(vec![0.6], 30, 1e-9).unwrap();
        let model = &policy.model;
        for x in 1..=30 {
            let with_arrival = model.state_index(&[x], &[ArrivalFlag::Present]);
            assert_eq!(policy.actions[with_arrival], UPDATE);
            let without = model.state_index(&[x], &[ArrivalFlag::Absent]);
            // idle and the useless update tie; ties resolve to idle
            assert_eq!(policy.actions[without], 0);
        }
    }

    #[test]
    fn deterministic_two_user_optimum_alternates() {
        let policy = solve_joint(vec![1.0, 1.0], 20, 1e-9).unwrap();
        assert!(
            (policy.gain() - 3.0).abs() <= 1e-6,
            "gain {} should be 1 + 2",
            policy.gain()
        );
        // From distinct ages with both arrivals present, serve the older.
        let d = policy.decide(&[1, 2], &[ArrivalFlag::Present, ArrivalFlag::Present]);
        assert_eq!(d, Decision::Update(1));
        let d = policy.decide(&[2, 1], &[ArrivalFlag::Present, ArrivalFlag::Present]);
        assert_eq!(d, Decision::Update(0));
    }

    #[test]
    fn gain_respects_the_total_age_floor() {
        for (ps, floor) in [
            (vec![0.5, 0.5], 3.0),
            (vec![0.3, 0.9], 3.0),
            (vec![0.5, 0.6, 0.7], 6.0),
        ] {
            let x_max = if ps.len() == 3 { 12 } else { 25 };
            let policy = solve_joint(ps.clone(), x_max, 1e-8).unwrap();
            assert!(
                policy.gain() >= floor - 1e-9,
                "gain {} below floor {floor} for {ps:?}",
                policy.gain()
            );
        }
    }

    #[test]
    fn table_round_trips_through_text() {
        let policy = solve_joint(vec![0.5, 0.7], 6, 1e-8).unwrap();
        let table = policy.to_table_string();
        let parsed = JointPolicy::from_table_string(&table).unwrap();
        assert_eq!(policy.actions, parsed.actions);
        for ages in [[1u64, 2], [3, 5], [6, 6], [9, 2]] {
            for mask in 0..4u8 {
                let flags = [
                    ArrivalFlag::from_bool(mask & 1 != 0),
                    ArrivalFlag::from_bool(mask & 2 != 0),
                ];
                assert_eq!(policy.decide(&ages, &flags), parsed.decide(&ages, &flags));
            }
        }
        assert!(JointPolicy::from_table_string("2\n").is_err());
    }
}
