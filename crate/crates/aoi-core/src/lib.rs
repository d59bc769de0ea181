//! Age-of-information scheduling for a slotted broadcast network.
//!
//! A base station updates `N` users over a noiseless broadcast channel, one
//! user per slot, on Bernoulli packet arrivals that cannot be buffered. The
//! per-user freshness cost is the age of information: the number of slots
//! since the newest delivered packet was generated. This crate provides
//!
//! * the closed-form Whittle index for the decoupled single-user problem and
//!   the optimal-threshold map derived from it ([`whittle`]),
//! * analytic steady-state distributions for the single-user age chains,
//!   giving an independent route to the threshold-policy average cost
//!   ([`dtmc`]),
//! * brute-force average-cost and discounted value-iteration solvers for the
//!   single-user sub-problem and the joint N-user problem, used as oracles
//!   against the closed forms ([`mdp`]),
//! * an N-user slotted simulator with pluggable schedulers ([`sim`]), and
//! * a reproducible experiment runner with CSV output ([`experiment`]).

pub mod arrival;
pub mod dtmc;
pub mod error;
pub mod experiment;
pub mod mdp;
pub mod sim;
pub mod types;
pub mod verify;
pub mod whittle;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
