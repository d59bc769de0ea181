//! Slotted N-user broadcast simulator with pluggable schedulers.
//!
//! Each slot proceeds as: arrivals land at the base station, the pre-decision
//! ages are recorded (those are what the objective averages), the scheduler
//! picks a user or idles, and the ages step. A packet not sent in its
//! arrival slot is gone; no queue exists anywhere in here.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arrival::ArrivalProcess;
use crate::error::Error;
use crate::mdp::JointPolicy;
use crate::types::{Age, Decision, NetworkState};
use crate::whittle::whittle_index;
use crate::Result;

/// Decision rules available to [`run`].
#[derive(Debug, Clone, Copy)]
pub enum Scheduler<'a> {
    /// Update the user with the largest Whittle index; idle when every index
    /// is zero (no arrivals anywhere).
    Whittle,
    /// Update the oldest user among those with an arrival; idle if none.
    MaxAge,
    /// Cycle through users regardless of arrivals.
    RoundRobin,
    /// Uniformly random among users with an arrival; idle if none.
    Random,
    /// Greedy table of the solved joint model.
    OptimalLookup(&'a JointPolicy),
    /// Per-user threshold rule: update user i when its arrival is present
    /// and its age is at least `thresholds[i]`; smallest eligible id wins.
    /// Mostly a single-user diagnostic.
    Threshold(&'a [u64]),
}

impl Scheduler<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Scheduler::Whittle => "whittle",
            Scheduler::MaxAge => "max_age",
            Scheduler::RoundRobin => "round_robin",
            Scheduler::Random => "random",
            Scheduler::OptimalLookup(_) => "optimal",
            Scheduler::Threshold(_) => "threshold",
        }
    }
}

/// Time-averaged results of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Number of observed slots T; the average is over slots 0..T.
    pub horizon: u64,
    /// Average of Σ_i X_i(t) over the horizon, ages read before decisions.
    pub time_avg_total_age: f64,
    pub per_user_avg_age: Vec<f64>,
    /// Updates that actually delivered a packet.
    pub per_user_update_count: Vec<u64>,
    /// Slots in which the scheduler targeted a user without an arrival.
    pub wasted_slots: u64,
    pub seed: u64,
}

/// The Whittle scheduling rule: serve the user with the highest index
/// I(X_i, Λ_i; p_i), idle when the best index is zero, break ties among
/// equal positive indices toward the smallest user id.
pub fn whittle_decide(state: &NetworkState, ps: &[f64]) -> Decision {
    assert_eq!(ps.len(), state.num_users());
    let mut best = 0.0;
    let mut decision = Decision::Idle;
    for (i, (&age, (&flag, &p))) in state
        .ages()
        .iter()
        .zip(state.arrivals().iter().zip(ps))
        .enumerate()
    {
        let index = whittle_index(age, flag, p);
        if index > best {
            best = index;
            decision = Decision::Update(i);
        }
    }
    decision
}

struct SchedulerEngine<'a> {
    kind: Scheduler<'a>,
    ps: Vec<f64>,
    rr_cursor: usize,
    rng: ChaCha8Rng,
}

impl<'a> SchedulerEngine<'a> {
    fn new(kind: Scheduler<'a>, process: &ArrivalProcess) -> Self {
        // stream 0 is reserved for scheduler randomness; user arrivals use
        // streams 1..=N
        let mut rng = ChaCha8Rng::seed_from_u64(process.seed());
        rng.set_stream(0);
        SchedulerEngine {
            kind,
            ps: process.probabilities().to_vec(),
            rr_cursor: 0,
            rng,
        }
    }

    fn decide(&mut self, state: &NetworkState) -> Decision {
        match self.kind {
            Scheduler::Whittle => whittle_decide(state, &self.ps),
            Scheduler::MaxAge => {
                let mut best = 0u64;
                let mut decision = Decision::Idle;
                for (i, (&age, &flag)) in
                    state.ages().iter().zip(state.arrivals()).enumerate()
                {
                    if flag.is_present() && age.get() > best {
                        best = age.get();
                        decision = Decision::Update(i);
                    }
                }
                decision
            }
            Scheduler::RoundRobin => {
                let target = self.rr_cursor;
                self.rr_cursor = (self.rr_cursor + 1) % state.num_users();
                Decision::Update(target)
            }
            Scheduler::Random => {
                let candidates: Vec<usize> = state
                    .arrivals()
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.is_present())
                    .map(|(i, _)| i)
                    .collect();
                if candidates.is_empty() {
                    Decision::Idle
                } else {
                    Decision::Update(candidates[self.rng.gen_range(0..candidates.len())])
                }
            }
            Scheduler::OptimalLookup(policy) => {
                let ages: Vec<u64> = state.ages().iter().map(|a| a.get()).collect();
                policy.decide(&ages, state.arrivals())
            }
            Scheduler::Threshold(thresholds) => {
                assert_eq!(thresholds.len(), state.num_users());
                state
                    .ages()
                    .iter()
                    .zip(state.arrivals())
                    .zip(thresholds)
                    .position(|((age, flag), &t)| flag.is_present() && age.get() >= t)
                    .map_or(Decision::Idle, Decision::Update)
            }
        }
    }
}

fn validate_initial_ages(ages: &[u64], n: usize) -> Result<Vec<Age>> {
    if ages.len() != n {
        return Err(Error::Config(format!(
            "{} initial ages for {n} users",
            ages.len()
        )));
    }
    for (i, &a) in ages.iter().enumerate() {
        if a == 0 {
            return Err(Error::Config(format!("initial age of user {i} is 0")));
        }
        if ages[..i].contains(&a) {
            return Err(Error::Config(format!(
                "initial ages must be pairwise distinct, {a} repeats"
            )));
        }
    }
    Ok(ages.iter().map(|&a| Age::new(a)).collect())
}

/// Runs one seeded simulation over `horizon` slots and reports the
/// time-averaged ages.
///
/// Initial ages default to 1, 2, ..., N. The total pre-decision age is
/// checked against the hard floor N(N+1)/2 every slot; a violation is a
/// simulator bug and panics immediately.
pub fn run(
    process: &ArrivalProcess,
    scheduler: Scheduler<'_>,
    horizon: u64,
    initial_ages: Option<&[u64]>,
) -> Result<SimReport> {
    run_internal(process, scheduler, horizon, initial_ages, None::<&mut Vec<u8>>)
}

/// [`run`] with a per-slot trace: `slot,D,X_1..X_N,L_1..L_N` lines.
pub fn run_with_trace(
    process: &ArrivalProcess,
    scheduler: Scheduler<'_>,
    horizon: u64,
    initial_ages: Option<&[u64]>,
    trace: &mut impl Write,
) -> Result<SimReport> {
    run_internal(process, scheduler, horizon, initial_ages, Some(trace))
}

fn run_internal(
    process: &ArrivalProcess,
    scheduler: Scheduler<'_>,
    horizon: u64,
    initial_ages: Option<&[u64]>,
    mut trace: Option<&mut impl Write>,
) -> Result<SimReport> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let n = process.num_users();
    let ages = match initial_ages {
        Some(ages) => validate_initial_ages(ages, n)?,
        None => (1..=n as u64).map(Age::new).collect(),
    };
    let floor = (n as u64) * (n as u64 + 1) / 2;

    let mut state = NetworkState::new(ages);
    let mut sampler = process.sampler();
    let mut engine = SchedulerEngine::new(scheduler, process);
    let mut total_sum: u128 = 0;
    let mut user_sums = vec![0u128; n];
    let mut update_counts = vec![0u64; n];
    let mut wasted = 0u64;

    for t in 0..horizon {
        let arrivals = sampler.sample_arrivals(t);
        state.install_arrivals(arrivals);

        let total = state.total_age();
        assert!(
            total >= floor,
            "total age {total} fell below the floor {floor} in slot {t}"
        );
        total_sum += u128::from(total);
        for (sum, age) in user_sums.iter_mut().zip(state.ages()) {
            *sum += u128::from(age.get());
        }

        let decision = engine.decide(&state);
        if let Some(i) = decision.user() {
            assert!(i < n, "scheduler targeted nonexistent user {i}");
            if state.arrivals()[i].is_present() {
                update_counts[i] += 1;
            } else {
                wasted += 1;
            }
        }

        if let Some(w) = trace.as_deref_mut() {
            write!(w, "{t},{}", decision.code())?;
            for age in state.ages() {
                write!(w, ",{age}")?;
            }
            for flag in state.arrivals() {
                write!(w, ",{flag}")?;
            }
            writeln!(w)?;
        }

        let next = state.step(decision, state.arrivals());
        state = next;
    }

    let t = horizon as f64;
    Ok(SimReport {
        horizon,
        time_avg_total_age: total_sum as f64 / t,
        per_user_avg_age: user_sums.iter().map(|&s| s as f64 / t).collect(),
        per_user_update_count: update_counts,
        wasted_slots: wasted,
        seed: process.seed(),
    })
}

/// Post-action age trace of the single-user threshold policy: the sequence
/// y(t) = x + 1 − x·a·λ, which is also the next slot's pre-action age.
pub fn single_user_postaction_trace(
    p: f64,
    threshold: u64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if threshold < 1 {
        return Err(Error::InvalidThreshold { value: threshold });
    }
    let process = ArrivalProcess::new(vec![p], seed)?;
    let mut sampler = process.sampler();
    let mut x = 1u64;
    let mut trace = Vec::with_capacity(horizon as usize);
    for t in 0..horizon {
        let arrival = sampler.sample_arrivals(t)[0];
        let update = arrival.is_present() && x >= threshold;
        let y = if update { 1 } else { x + 1 };
        trace.push(y);
        x = y;
    }
    Ok(trace)
}
