//! Online correlated selection and edge-weighted online bipartite matching
//! with free disposal.
pub mod harness;
pub mod lp;
pub mod ocs;
pub mod primal_dual;
pub mod step_fn;

pub use harness::{run_experiment, ExperimentReport, Instance};
pub use lp::{build_lp, solve_lp, LpInstance, LpSolution};
pub use ocs::{Candidate, CoinSource, OcsVariant, Pair, RngCoins, Selector};
pub use primal_dual::{GainShareParams, Matcher, MatchError, RoundDecision};
pub use step_fn::{Level, StepFunction};
