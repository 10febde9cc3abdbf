//! Instances, the offline benchmark, Monte Carlo experiments and exact OCS
//! enumeration.

pub mod enumerate;
pub mod experiment;
pub mod generators;
pub mod instance;
pub mod offline;

pub use enumerate::{
    all_sequences, bound_table, enumerate_exact, enumerate_float, exact_bound_rows, float_bound_rows,
    sequence, BoundRow, EnumError, Enumeration,
};
pub use experiment::{run_experiment, ExperimentError, ExperimentReport, Schedule};
pub use instance::{Arrival, Instance, InstanceError, InstanceMeta};
pub use offline::{brute_force_matching, max_weight_matching, offline_opt};
