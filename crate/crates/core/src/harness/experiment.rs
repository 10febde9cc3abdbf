//! Monte Carlo runs of the matcher.
//!
//! The matcher's decisions never depend on the selector's coins, so the
//! schedule of rounds is computed once and each trial only replays the
//! randomized rounds through a fresh selector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instance::{Instance, InstanceMeta};
use super::offline::offline_opt;
use crate::ocs::{OcsError, OcsVariant, Pair, RngCoins};
use crate::primal_dual::{
    AuditRecord, DecisionKind, GainShareParams, InvariantViolation, MatchError, Matcher,
};

pub const SEED_SCHEME: &str = "chacha8: seed_from_u64(seed), set_stream(trial)";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Ocs(#[from] OcsError),
}

/// Per-trial RNG: the master seed with the trial index as stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The coin-independent part of a run.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub variant: OcsVariant,
    pub matcher: Matcher,
    pub weights: Vec<Vec<f64>>,
}

impl Schedule {
    pub fn plan(instance: &Instance, params: &GainShareParams, variant: OcsVariant) -> Result<Self, ExperimentError> {
        let mut matcher = Matcher::new(instance.n_offline, params.clone(), variant.gamma())?;
        let mut selector = variant.session();
        let mut coins = RngCoins(trial_rng(0, 0));
        let weights = instance.matrix();
        for w in &weights {
            matcher.arrive(w, selector.as_mut(), &mut coins)?;
        }
        Ok(Self { variant, matcher, weights })
    }

    pub fn decisions(&self) -> impl Iterator<Item = DecisionKind> + '_ {
        self.matcher.ledger().decisions.iter().map(|d| d.kind.schedule())
    }

    /// Free-disposal value of one trial.
    pub fn replay(&self, seed: u64, trial: u64) -> Result<f64, OcsError> {
        let mut selector = self.variant.session();
        let mut coins = RngCoins(trial_rng(seed, trial));
        let mut heaviest = vec![0.0f64; self.matcher.offline().len()];
        for (t, kind) in self.decisions().enumerate() {
            let w = &self.weights[t];
            let got = match kind {
                DecisionKind::Randomized { first, second, .. } => {
                    Some(selector.select(Pair::new(t, first, second)?, &mut coins)?)
                }
                DecisionKind::Deterministic { vertex } => Some(vertex),
                DecisionKind::Unmatched => None,
            };
            if let Some(i) = got {
                heaviest[i] = heaviest[i].max(w[i]);
            }
        }
        Ok(heaviest.iter().sum())
    }

    pub fn audit_log(&self) -> Vec<AuditRecord> {
        self.matcher.ledger().decisions.iter().map(AuditRecord::from).collect()
    }
}

/// Runs the full matcher (not the replay) for one trial.
pub fn run_full_trial(
    instance: &Instance,
    params: &GainShareParams,
    variant: OcsVariant,
    seed: u64,
    trial: u64,
) -> Result<f64, ExperimentError> {
    let mut matcher = Matcher::new(instance.n_offline, params.clone(), variant.gamma())?;
    let mut selector = variant.session();
    let mut coins = RngCoins(trial_rng(seed, trial));
    for w in instance.matrix() {
        matcher.arrive(&w, selector.as_mut(), &mut coins)?;
    }
    Ok(matcher.realized_value())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCounts {
    pub randomized: usize,
    pub deterministic: usize,
    pub unmatched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub instance: InstanceMeta,
    pub n_offline: usize,
    pub n_online: usize,
    pub params: GainShareParams,
    pub ocs: OcsVariant,
    pub trials: u64,
    pub seed: u64,
    pub seed_scheme: String,
    pub mean_value: f64,
    pub stderr_value: f64,
    /// Surrogate objective `Ā`.
    pub surrogate: f64,
    /// Dual objective `D`.
    pub dual: f64,
    pub opt: f64,
    pub mean_ratio: Option<f64>,
    pub stderr_ratio: Option<f64>,
    pub dual_ratio: Option<f64>,
    pub rounds: RoundCounts,
    pub invariant_violations: Vec<InvariantViolation>,
    pub audit_violations: Vec<InvariantViolation>,
}

impl ExperimentReport {
    pub fn violations(&self) -> usize {
        self.invariant_violations.len() + self.audit_violations.len()
    }

    /// `mean ≥ Γ·OPT − z·stderr`.
    pub fn meets_ratio(&self, z: f64) -> bool {
        self.mean_value >= self.params.ratio * self.opt - z * self.stderr_value
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn run_experiment(
    instance: &Instance,
    params: &GainShareParams,
    variant: OcsVariant,
    trials: u64,
    seed: u64,
) -> Result<(ExperimentReport, Schedule), ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let schedule = Schedule::plan(instance, params, variant)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|t| schedule.replay(seed, t))
        .collect::<Result<Vec<f64>, _>>()?;
    let (mean_value, stderr_value) = mean_stderr(&values);
    let opt = offline_opt(instance);
    let ledger = schedule.matcher.ledger();
    let mut rounds = RoundCounts::default();
    for d in &ledger.decisions {
        match d.kind {
            DecisionKind::Randomized { .. } => rounds.randomized += 1,
            DecisionKind::Deterministic { .. } => rounds.deterministic += 1,
            DecisionKind::Unmatched => rounds.unmatched += 1,
        }
    }
    let ratio = |x: f64| (opt > 0.0).then(|| x / opt);
    let report = ExperimentReport {
        instance: instance.meta.clone(),
        n_offline: instance.n_offline,
        n_online: instance.n_online(),
        params: params.clone(),
        ocs: variant,
        trials,
        seed,
        seed_scheme: SEED_SCHEME.into(),
        mean_value,
        stderr_value,
        surrogate: ledger.surrogate,
        dual: ledger.dual,
        opt,
        mean_ratio: ratio(mean_value),
        stderr_ratio: ratio(stderr_value),
        dual_ratio: ratio(ledger.dual),
        rounds,
        invariant_violations: ledger.violations.clone(),
        audit_violations: schedule.matcher.audit_dual_feasibility(),
    };
    Ok((report, schedule))
}
