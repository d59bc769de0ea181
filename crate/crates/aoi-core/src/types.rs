//! Shared domain types for the slotted broadcast system.
//!
//! Ages are measured in whole slots and are at least 1: a user that was just
//! updated observes age 1 in the next slot because the transmission itself
//! takes one slot. Ages are stored as 64-bit integers and are never truncated
//! by the simulator; only the MDP solvers work on a truncated age space.

use std::fmt;

/// Age of information for one user, in slots. Always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Age(u64);

impl Age {
    /// Creates an age. Panics if `value` is 0; an observed age is never
    /// below 1 in this model.
    pub fn new(value: u64) -> Self {
        assert!(value >= 1, "age must be at least 1, got {value}");
        Age(value)
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// The age one slot later when the user is not updated.
    pub fn incremented(self) -> Self {
        Age(self.0 + 1)
    }
}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Indicator of a packet arrival at the base station in the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrivalFlag {
    Absent,
    Present,
}

impl ArrivalFlag {
    pub fn from_bool(present: bool) -> Self {
        if present {
            ArrivalFlag::Present
        } else {
            ArrivalFlag::Absent
        }
    }

    pub fn is_present(self) -> bool {
        matches!(self, ArrivalFlag::Present)
    }

    /// 0 or 1, as the flag appears in traces and state encodings.
    pub fn as_u8(self) -> u8 {
        match self {
            ArrivalFlag::Absent => 0,
            ArrivalFlag::Present => 1,
        }
    }
}

impl fmt::Display for ArrivalFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// The base station's decision for one slot: idle, or update one user.
///
/// `Update(i)` carries the zero-based user index; the wire encoding used in
/// traces and tables is `0` for idle and `i + 1` for user `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Idle,
    Update(usize),
}

impl Decision {
    /// Wire encoding: 0 = idle, i + 1 = update user i.
    pub fn code(self) -> usize {
        match self {
            Decision::Idle => 0,
            Decision::Update(i) => i + 1,
        }
    }

    /// Inverse of [`Decision::code`] for a system of `n` users.
    pub fn from_code(code: usize, n: usize) -> Option<Self> {
        match code {
            0 => Some(Decision::Idle),
            i if i <= n => Some(Decision::Update(i - 1)),
            _ => None,
        }
    }

    /// The targeted user index, if any.
    pub fn user(self) -> Option<usize> {
        match self {
            Decision::Idle => None,
            Decision::Update(i) => Some(i),
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Per-user ages and current arrival flags for one slot.
///
/// When initialized with pairwise distinct ages the dynamics keep them
/// distinct: at most one age resets to 1 per slot while every other age
/// increments, and an incremented age is always at least 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    ages: Vec<Age>,
    arrivals: Vec<ArrivalFlag>,
    slot: u64,
}

impl NetworkState {
    /// Creates the state for slot 0 with no arrivals installed yet.
    pub fn new(initial_ages: Vec<Age>) -> Self {
        let n = initial_ages.len();
        NetworkState {
            ages: initial_ages,
            arrivals: vec![ArrivalFlag::Absent; n],
            slot: 0,
        }
    }

    /// Default initial ages 1, 2, ..., N: pairwise distinct and meeting the
    /// total-age lower bound with equality.
    pub fn with_default_ages(n: usize) -> Self {
        Self::new((1..=n as u64).map(Age::new).collect())
    }

    pub fn num_users(&self) -> usize {
        self.ages.len()
    }

    pub fn ages(&self) -> &[Age] {
        &self.ages
    }

    pub fn arrivals(&self) -> &[ArrivalFlag] {
        &self.arrivals
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Installs the arrival flags for the current slot.
    pub fn install_arrivals(&mut self, arrivals: Vec<ArrivalFlag>) {
        assert_eq!(arrivals.len(), self.ages.len());
        self.arrivals = arrivals;
    }

    pub fn total_age(&self) -> u64 {
        self.ages.iter().map(|a| a.get()).sum()
    }

    /// Advances one slot. `arrivals` are the flags for the *current* slot,
    /// the ones the decision acts on. The returned state has no arrivals
    /// installed; the caller samples and installs the next slot's flags.
    ///
    /// Per-user update: age becomes 1 exactly when this user is targeted and
    /// has an arrival; otherwise it increments. Targeting a user without an
    /// arrival is legal and leaves every age incrementing (the packetless
    /// update does nothing); callers may count it as a wasted slot.
    pub fn step(&self, decision: Decision, arrivals: &[ArrivalFlag]) -> NetworkState {
        assert_eq!(arrivals.len(), self.ages.len());
        let ages = self
            .ages
            .iter()
            .enumerate()
            .map(|(i, age)| {
                if decision == Decision::Update(i) && arrivals[i].is_present() {
                    Age::new(1)
                } else {
                    age.incremented()
                }
            })
            .collect();
        NetworkState {
            ages,
            arrivals: vec![ArrivalFlag::Absent; self.ages.len()],
            slot: self.slot + 1,
        }
    }
}
