//! The online primal-dual matcher.
//!
//! On each arrival every offline vertex `i` quotes `Δ^R_i`, what the online
//! dual `β_j` would gain from `i` as one of two candidates of a randomized
//! round, and `Δ^D_i = κ Δ^R_i` for a deterministic match. The round is
//! randomized when the two best `Δ^R` quotes together reach both the best
//! `Δ^D` and zero, deterministic when the best `Δ^D` is nonnegative and
//! strictly larger, and unmatched otherwise. These decisions depend only on
//! the instance, never on the selector's coins.
//!
//! Each offline vertex keeps three step functions over weight levels: the
//! candidate count `k_i(w)`, the dual density `α_i(w)` and the surrogate CCDF
//! `ȳ_i(w)`, a lower bound on the probability that `i` ends up with an edge
//! of weight at least `w`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::GainShareParams;
use crate::ocs::{Candidate, CoinSource, OcsError, Pair, Selector};
use crate::step_fn::{Level, StepFunction};

/// Slack for all runtime invariant checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("matcher gamma {params} does not match selector gamma {selector}")]
    GammaMismatch { params: f64, selector: f64 },
    #[error("kappa = {0} outside (1, 2)")]
    Kappa(f64),
    #[error("at least one offline vertex is required")]
    NoOfflineVertices,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight {weight} of offline vertex {vertex} is not a finite nonnegative number")]
    BadWeight { vertex: usize, weight: f64 },
    #[error(transparent)]
    Ocs(#[from] OcsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineState {
    pub k: StepFunction<Level>,
    pub alpha: StepFunction<f64>,
    pub y_bar: StepFunction<f64>,
    /// Edge weight in the last randomized round with this vertex as a
    /// candidate; 0 before the first.
    pub w_last: f64,
}

impl Default for OfflineState {
    fn default() -> Self {
        Self {
            k: StepFunction::zero_level(),
            alpha: StepFunction::zero(),
            y_bar: StepFunction::zero(),
            w_last: 0.0,
        }
    }
}

impl OfflineState {
    pub fn alpha_total(&self) -> f64 {
        self.alpha.integrate().expect("alpha has finite support")
    }

    pub fn surrogate_value(&self) -> f64 {
        self.y_bar.integrate().expect("y_bar has finite support")
    }
}

/// `Δ^R_i β_j`: `∫_0^w b(k(v)) dv − ½ ∫_w^∞ Σ_{ℓ<k(v)} a(ℓ) dv`.
pub fn delta_r_beta(state: &OfflineState, w: f64, params: &GainShareParams) -> f64 {
    let gain = state
        .k
        .integrate_map(0.0, w, |k| Some(params.b(k)))
        .expect("k has finite support");
    let refund = state
        .k
        .integrate_map(w, f64::INFINITY, |k| Some(params.alpha_floor(k)))
        .expect("k has finite support");
    gain - 0.5 * refund
}

/// `Δ^D_i β_j = κ Δ^R_i β_j`.
pub fn delta_d_beta(state: &OfflineState, w: f64, params: &GainShareParams) -> f64 {
    params.kappa * delta_r_beta(state, w, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DecisionKind {
    Randomized {
        first: Candidate,
        second: Candidate,
        chosen: Candidate,
    },
    Deterministic {
        vertex: Candidate,
    },
    Unmatched,
}

impl DecisionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DecisionKind::Randomized { .. } => "randomized",
            DecisionKind::Deterministic { .. } => "deterministic",
            DecisionKind::Unmatched => "unmatched",
        }
    }

    /// The decision with the selector's outcome erased.
    pub fn schedule(&self) -> DecisionKind {
        match *self {
            DecisionKind::Randomized { first, second, .. } => DecisionKind::Randomized {
                first,
                second,
                chosen: first,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDecision {
    pub round: usize,
    #[serde(flatten)]
    pub kind: DecisionKind,
    pub beta: f64,
    pub delta_r: Vec<f64>,
    pub delta_d: Vec<f64>,
    /// Increment of the surrogate objective `Ā`.
    pub surrogate_gain: f64,
    /// Increment of the dual objective `D`.
    pub dual_gain: f64,
}

/// One JSON-lines audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub round: usize,
    pub kind: String,
    pub beta: f64,
    pub surrogate_gain: f64,
    pub dual_gain: f64,
}

impl From<&RoundDecision> for AuditRecord {
    fn from(d: &RoundDecision) -> Self {
        Self {
            round: d.round,
            kind: d.kind.name().to_string(),
            beta: d.beta,
            surrogate_gain: d.surrogate_gain,
            dual_gain: d.dual_gain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// `ΔĀ ≥ ΔD` in the round.
    ObjectiveOrder,
    /// Per-candidate gain split: `Δȳ_i ≥ Δα_i + (share of β_j)`.
    GainSplit,
    /// `α_i(w) ≥ Σ_{ℓ<k_i(w)} a(ℓ)`.
    AlphaFloor,
    /// `1 − ȳ_i(w) ≥ 2^{-k} (1−γ)^{max(k−1,0)}`, equality 0 at infinity.
    UnmatchedFloor,
    /// `α_i + β_j ≥ Γ w_ij`.
    DualFeasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub round: usize,
    pub kind: InvariantKind,
    pub vertex: Option<usize>,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatcherLedger {
    /// Surrogate objective `Ā = Σ_i ∫ ȳ_i`.
    pub surrogate: f64,
    /// Dual objective `D = Σ_i ∫ α_i + Σ_j β_j`.
    pub dual: f64,
    pub decisions: Vec<RoundDecision>,
    pub violations: Vec<InvariantViolation>,
}

#[derive(Debug, Clone)]
pub struct Matcher {
    params: GainShareParams,
    offline: Vec<OfflineState>,
    ledger: MatcherLedger,
    arrivals: Vec<Vec<f64>>,
    /// Heaviest weight actually assigned to each offline vertex.
    heaviest: Vec<f64>,
}

impl Matcher {
    /// A matcher over `n_offline` vertices, to be paired with a selector of
    /// quality `selector_gamma`.
    pub fn new(
        n_offline: usize,
        params: GainShareParams,
        selector_gamma: f64,
    ) -> Result<Self, MatchError> {
        if n_offline == 0 {
            return Err(MatchError::NoOfflineVertices);
        }
        if (params.gamma - selector_gamma).abs() > 1e-9 {
            return Err(MatchError::GammaMismatch {
                params: params.gamma,
                selector: selector_gamma,
            });
        }
        if !(params.kappa > 1.0 && params.kappa < 2.0) {
            return Err(MatchError::Kappa(params.kappa));
        }
        Ok(Self {
            params,
            offline: vec![OfflineState::default(); n_offline],
            ledger: MatcherLedger::default(),
            arrivals: Vec::new(),
            heaviest: vec![0.0; n_offline],
        })
    }

    pub fn params(&self) -> &GainShareParams {
        &self.params
    }

    pub fn offline(&self) -> &[OfflineState] {
        &self.offline
    }

    pub fn ledger(&self) -> &MatcherLedger {
        &self.ledger
    }

    pub fn arrivals(&self) -> &[Vec<f64>] {
        &self.arrivals
    }

    /// Processes the next online vertex. `weights[i]` is its edge weight to
    /// offline vertex `i`; absent edges are weight 0.
    pub fn arrive(
        &mut self,
        weights: &[f64],
        selector: &mut dyn Selector,
        coins: &mut dyn CoinSource,
    ) -> Result<RoundDecision, MatchError> {
        let n = self.offline.len();
        if weights.len() != n {
            return Err(MatchError::WeightCount { expected: n, got: weights.len() });
        }
        if let Some((vertex, &weight)) =
            weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(MatchError::BadWeight { vertex, weight });
        }
        let round = self.arrivals.len();
        let p = &self.params;
        let delta_r: Vec<f64> = self
            .offline
            .iter()
            .zip(weights)
            .map(|(s, &w)| delta_r_beta(s, w, p))
            .collect();
        let delta_d: Vec<f64> = delta_r.iter().map(|d| p.kappa * d).collect();

        // ties resolve to the lowest id
        let argmax = |vals: &[f64], skip: Option<usize>| -> Option<usize> {
            let mut best: Option<usize> = None;
            for (i, &v) in vals.iter().enumerate() {
                if Some(i) == skip {
                    continue;
                }
                if best.is_none_or(|b| v > vals[b]) {
                    best = Some(i);
                }
            }
            best
        };
        let star = argmax(&delta_d, None).expect("n ≥ 1");
        let top_pair = argmax(&delta_r, None)
            .and_then(|i1| argmax(&delta_r, Some(i1)).map(|i2| (i1, i2)));
        let best_d = delta_d[star];

        let kind = match top_pair {
            Some((i1, i2)) if {
                let sum = delta_r[i1] + delta_r[i2];
                sum >= best_d && sum >= 0.0
            } =>
            {
                let pair = Pair::new(round, i1, i2)?;
                let chosen = selector.select(pair, coins)?;
                DecisionKind::Randomized { first: i1, second: i2, chosen }
            }
            _ if best_d >= 0.0 => DecisionKind::Deterministic { vertex: star },
            _ => DecisionKind::Unmatched,
        };

        let (beta, surrogate_gain, alpha_gain) = match kind {
            DecisionKind::Randomized { first, second, chosen } => {
                let mut surrogate_gain = 0.0;
                let mut alpha_gain = 0.0;
                for i in [first, second] {
                    let (dy, da) = self.randomized_update(i, weights[i]);
                    let share = delta_r[i];
                    if dy < da + share - CHECK_TOLERANCE {
                        self.violation(round, InvariantKind::GainSplit, Some(i), da + share - dy);
                    }
                    surrogate_gain += dy;
                    alpha_gain += da;
                }
                self.heaviest[chosen] = self.heaviest[chosen].max(weights[chosen]);
                (delta_r[first] + delta_r[second], surrogate_gain, alpha_gain)
            }
            DecisionKind::Deterministic { vertex } => {
                let (dy, da) = self.deterministic_update(vertex, weights[vertex]);
                let beta = delta_d[vertex];
                if dy < da + beta - CHECK_TOLERANCE {
                    self.violation(round, InvariantKind::GainSplit, Some(vertex), da + beta - dy);
                }
                self.heaviest[vertex] = self.heaviest[vertex].max(weights[vertex]);
                (beta, dy, da)
            }
            DecisionKind::Unmatched => (0.0, 0.0, 0.0),
        };

        let dual_gain = alpha_gain + beta;
        if surrogate_gain < dual_gain - CHECK_TOLERANCE {
            self.violation(round, InvariantKind::ObjectiveOrder, None, dual_gain - surrogate_gain);
        }
        let touched: Vec<usize> = match kind {
            DecisionKind::Randomized { first, second, .. } => vec![first, second],
            DecisionKind::Deterministic { vertex } => vec![vertex],
            DecisionKind::Unmatched => vec![],
        };
        for i in touched {
            self.check_floors(round, i);
        }

        self.ledger.surrogate += surrogate_gain;
        self.ledger.dual += dual_gain;
        self.arrivals.push(weights.to_vec());
        let decision = RoundDecision {
            round,
            kind,
            beta,
            delta_r,
            delta_d,
            surrogate_gain,
            dual_gain,
        };
        self.ledger.decisions.push(decision.clone());
        Ok(decision)
    }

    /// Applies the randomized-round update to candidate `i`; returns the
    /// increments of `∫ȳ_i` and `∫α_i`.
    fn randomized_update(&mut self, i: usize, w: f64) -> (f64, f64) {
        let p = &self.params;
        let s = &mut self.offline[i];
        let w_last = s.w_last;
        let below = |hi: Option<f64>, cut: f64| hi.is_some_and(|h| h <= cut);

        let alpha_inc = s.k.map_pieces(&[w, w_last], |piece| match piece.value {
            Level::Infinite => 0.0,
            k @ Level::Finite(n) => {
                if below(piece.hi, w) {
                    if below(piece.hi, w_last) || n == 0 {
                        p.a(k)
                    } else {
                        p.a(k) - p.prepaid(k)
                    }
                } else {
                    p.prepaid(k)
                }
            }
        });
        let continuing = 0.5 * (1.0 - p.gamma);
        let y_new = s.y_bar.map_pieces(&[w, w_last], |piece| {
            if !below(piece.hi, w) {
                piece.value
            } else if below(piece.hi, w_last) {
                1.0 - (1.0 - piece.value) * continuing
            } else {
                1.0 - (1.0 - piece.value) * 0.5
            }
        });
        let dy = y_new.zip_with(&s.y_bar, |a, b| a - b).integrate().expect("finite support");
        let da = alpha_inc.integrate().expect("finite support");
        s.alpha = s.alpha.add(&alpha_inc);
        s.y_bar = y_new;
        s.k = s.k.transform_below(w, Level::incremented);
        s.w_last = w;
        (dy, da)
    }

    fn deterministic_update(&mut self, i: usize, w: f64) -> (f64, f64) {
        let p = &self.params;
        let s = &mut self.offline[i];
        let alpha_inc = s.k.map_pieces(&[w], |piece| {
            if piece.hi.is_some_and(|h| h <= w) {
                p.remaining_shares(piece.value)
            } else {
                0.0
            }
        });
        let y_new = s.y_bar.transform_below(w, |_| 1.0);
        let dy = y_new.zip_with(&s.y_bar, |a, b| a - b).integrate().expect("finite support");
        let da = alpha_inc.integrate().expect("finite support");
        s.alpha = s.alpha.add(&alpha_inc);
        s.y_bar = y_new;
        s.k = s.k.transform_below(w, |_| Level::Infinite);
        (dy, da)
    }

    fn check_floors(&mut self, round: usize, i: usize) {
        let p = &self.params;
        let s = &self.offline[i];
        let alpha_gap = s.alpha.zip_with(&s.k, |a, k| a - p.alpha_floor(k));
        let worst_alpha = alpha_gap.pieces().map(|pc| pc.value).fold(f64::INFINITY, f64::min);
        let unmatched_gap = s.y_bar.zip_with(&s.k, |y, k| match k {
            Level::Infinite => -(1.0 - y).abs(),
            _ => (1.0 - y) - p.unmatched_floor(k),
        });
        let worst_unmatched = unmatched_gap.pieces().map(|pc| pc.value).fold(f64::INFINITY, f64::min);
        if worst_alpha < -CHECK_TOLERANCE {
            self.violation(round, InvariantKind::AlphaFloor, Some(i), -worst_alpha);
        }
        if worst_unmatched < -CHECK_TOLERANCE {
            self.violation(round, InvariantKind::UnmatchedFloor, Some(i), -worst_unmatched);
        }
    }

    fn violation(&mut self, round: usize, kind: InvariantKind, vertex: Option<usize>, amount: f64) {
        self.ledger.violations.push(InvariantViolation { round, kind, vertex, amount });
    }

    /// Checks `∫α_i + β_j ≥ Γ w_ij − 1e-9` for every offline `i` and every
    /// arrived `j`, using the final `α` and the `β_j` fixed at round `j`.
    pub fn audit_dual_feasibility(&self) -> Vec<InvariantViolation> {
        let alpha: Vec<f64> = self.offline.iter().map(OfflineState::alpha_total).collect();
        let ratio = self.params.ratio;
        let mut out = Vec::new();
        for (decision, weights) in self.ledger.decisions.iter().zip(&self.arrivals) {
            for (i, &w) in weights.iter().enumerate() {
                let slack = alpha[i] + decision.beta - ratio * w;
                if slack < -CHECK_TOLERANCE {
                    out.push(InvariantViolation {
                        round: decision.round,
                        kind: InvariantKind::DualFeasibility,
                        vertex: Some(i),
                        amount: -slack,
                    });
                }
            }
        }
        out
    }

    /// Free-disposal value of the assignment made so far: each offline
    /// vertex counts only its heaviest assigned edge.
    pub fn realized_value(&self) -> f64 {
        self.heaviest.iter().sum()
    }

    /// Recomputes `Ā` and `D` from the current state (for cross-checking the
    /// incrementally maintained ledger).
    pub fn recompute_objectives(&self) -> (f64, f64) {
        let surrogate = self.offline.iter().map(OfflineState::surrogate_value).sum();
        let dual = self.offline.iter().map(OfflineState::alpha_total).sum::<f64>()
            + self.ledger.decisions.iter().map(|d| d.beta).sum::<f64>();
        (surrogate, dual)
    }
}
