//! The finite gain-sharing linear program and a dense simplex solver.

pub mod gain_share;
pub mod simplex;

pub use gain_share::{
    build_lp, kappa_sweep, share_table_csv, solve_lp, unmatched_floor, LpError, LpInstance,
    LpSolution,
};
pub use simplex::{LinearProgram, LpOutcome, LpStatus, Row, Sense};
