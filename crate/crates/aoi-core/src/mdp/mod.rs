//! Brute-force oracles for the closed forms: the single-user sub-problem
//! solved by relative (average-cost) and discounted value iteration, and the
//! joint N-user problem giving the age-optimal benchmark.
//!
//! The solvers are deliberately structure-agnostic — they never assume the
//! threshold shape — so that the threshold structure of the solved policies
//! is a tested conclusion, not an input.

mod joint;
mod solver;
mod subproblem;

pub use joint::{solve_joint, JointModel, JointPolicy, JOINT_STATE_CAP};
pub use solver::{DiscountedSolverConfig, SolvedPolicy};
pub use subproblem::{
    build_subproblem, discounted_value_iteration, dump_policy_table, extract_threshold,
    parse_policy_table, relative_value_iteration, SubproblemModel, IDLE, UPDATE,
};
