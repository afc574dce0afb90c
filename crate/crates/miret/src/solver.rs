//! Exact mixed-integer solving: a bounded-variable primal simplex for the
//! linear relaxations and a deterministic best-first branch-and-bound
//! search over the binary variables.

pub mod branch_bound;
pub mod simplex;

pub use branch_bound::{
    solve, solve_with, LogRecord, Rounder, SolveError, SolveOptions, SolveReport, SolveStatus,
    Solved,
};
pub use simplex::{solve_lp, solve_lp_within, LpOutcome, LpStatus, SimplexError};
