//! Online correlated selection.
//!
//! An OCS receives a stream of candidate pairs and picks one candidate per
//! pair, each with marginal probability exactly 1/2, while correlating the
//! choices of a candidate across the rounds it takes part in so that it is
//! left out everywhere less often than independent coins would leave it.
//!
//! All randomness flows through [`CoinSource`], so the same selection code is
//! driven by a seeded RNG in simulations and by a scripted source in the
//! exhaustive enumeration oracle.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod improved;
pub mod original;
pub mod recurrence;

pub use improved::{optimal_p, sender_gain, Component, DependenceGraph, ImprovedOcs, NodeType};
pub use original::{IndependentOcs, Marker, OcsState, OriginalOcs};
pub use recurrence::{
    consecutive_runs, f_table, g_table, never_chosen_bound, GTable, RecurrenceTable,
};

/// Offline-vertex id.
pub type Candidate = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcsError {
    #[error("degenerate pair: candidate {0} appears twice")]
    DegeneratePair(Candidate),
    #[error("round ids must increase: got {got} after {last}")]
    RoundOrder { last: usize, got: usize },
    #[error("parameter {name} = {value} outside [0, 1]")]
    Parameter { name: &'static str, value: f64 },
    #[error("run lengths must be at least 1")]
    EmptyRun,
    #[error("unknown round {0}")]
    UnknownRound(usize),
}

/// One randomized round: an ordered pair of distinct candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub round: usize,
    pub first: Candidate,
    pub second: Candidate,
}

impl Pair {
    pub fn new(round: usize, first: Candidate, second: Candidate) -> Result<Self, OcsError> {
        if first == second {
            return Err(OcsError::DegeneratePair(first));
        }
        Ok(Self { round, first, second })
    }

    pub fn candidates(&self) -> [Candidate; 2] {
        [self.first, self.second]
    }

    pub fn contains(&self, c: Candidate) -> bool {
        self.first == c || self.second == c
    }

    /// The candidate other than `c`.
    pub fn other(&self, c: Candidate) -> Candidate {
        if self.first == c {
            self.second
        } else {
            self.first
        }
    }

    /// Candidate at position `m ∈ {0, 1}`.
    pub fn at(&self, m: usize) -> Candidate {
        if m == 0 {
            self.first
        } else {
            self.second
        }
    }

    fn validate(&self) -> Result<(), OcsError> {
        if self.first == self.second {
            Err(OcsError::DegeneratePair(self.first))
        } else {
            Ok(())
        }
    }
}

/// Source of the binary random choices an OCS makes.
pub trait CoinSource {
    /// A fair coin.
    fn fair(&mut self) -> bool;
    /// `true` with probability `p`.
    fn bernoulli(&mut self, p: f64) -> bool;
}

/// Adapts any [`RngCore`] into a [`CoinSource`].
#[derive(Debug)]
pub struct RngCoins<R>(pub R);

impl<R: RngCore> CoinSource for RngCoins<R> {
    fn fair(&mut self) -> bool {
        self.0.gen::<bool>()
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.0.gen_bool(p.clamp(0.0, 1.0))
    }
}

/// The common selection interface.
pub trait Selector: Send {
    /// Chooses one candidate of `pair`.
    fn select(&mut self, pair: Pair, coins: &mut dyn CoinSource) -> Result<Candidate, OcsError>;

    /// The γ for which this selector satisfies the γ-OCS never-chosen bound.
    fn gamma(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcsVariant {
    /// Independent fair coins (a 0-OCS).
    Independent,
    /// Oblivious/adaptive marker scheme (a 1/16-OCS).
    Original,
    /// Sender/receiver dependence-graph scheme with the optimal sender
    /// probability (a 1/(3√3)-OCS).
    Improved,
}

impl OcsVariant {
    pub const ALL: [OcsVariant; 3] = [
        OcsVariant::Independent,
        OcsVariant::Original,
        OcsVariant::Improved,
    ];

    pub fn gamma(self) -> f64 {
        match self {
            OcsVariant::Independent => 0.0,
            OcsVariant::Original => 1.0 / 16.0,
            OcsVariant::Improved => optimal_p().1,
        }
    }

    /// A fresh selection session.
    pub fn session(self) -> Box<dyn Selector> {
        match self {
            OcsVariant::Independent => Box::new(IndependentOcs::default()),
            OcsVariant::Original => Box::new(OriginalOcs::default()),
            OcsVariant::Improved => Box::new(ImprovedOcs::optimal()),
        }
    }
}

impl fmt::Display for OcsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OcsVariant::Independent => "independent",
            OcsVariant::Original => "original",
            OcsVariant::Improved => "improved",
        })
    }
}

impl FromStr for OcsVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(OcsVariant::Independent),
            "original" => Ok(OcsVariant::Original),
            "improved" => Ok(OcsVariant::Improved),
            other => Err(format!("unknown OCS variant `{other}`")),
        }
    }
}

/// Tracks strictly increasing round ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub(crate) struct RoundClock {
    last: Option<usize>,
}

impl RoundClock {
    pub(crate) fn advance(&mut self, round: usize) -> Result<(), OcsError> {
        if let Some(last) = self.last {
            if round <= last {
                return Err(OcsError::RoundOrder { last, got: round });
            }
        }
        self.last = Some(round);
        Ok(())
    }
}
