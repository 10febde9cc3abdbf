//! Edge-weighted online bipartite matching with free disposal, analysed with
//! a primal-dual scheme over weight levels.

pub mod matcher;
pub mod params;

pub use matcher::{
    delta_d_beta, delta_r_beta, AuditRecord, DecisionKind, InvariantKind, InvariantViolation,
    MatchError, Matcher, MatcherLedger, OfflineState, RoundDecision, CHECK_TOLERANCE,
};
pub use params::GainShareParams;
