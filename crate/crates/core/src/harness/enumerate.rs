//! Exact enumeration of every random choice an OCS makes on a fixed pair
//! sequence.
//!
//! Each round is expanded over all coin scripts the selector can consume.
//! Branches that reach the same future-relevant selector state with the same
//! outcomes so far are merged, so the work grows with the number of distinct
//! states rather than with the number of coin paths.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ocs::{
    consecutive_runs, Candidate, CoinSource, ImprovedOcs, IndependentOcs, NodeType, OcsError,
    OcsVariant, OriginalOcs, Pair, Selector,
};

/// Longest sequence enumerated exactly for the original and independent
/// selectors.
pub const MAX_ROUNDS_EXACT: usize = 12;
/// Longest sequence enumerated for the improved selector.
pub const MAX_ROUNDS_IMPROVED: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnumError {
    #[error("{variant} enumeration is limited to {limit} rounds, got {got}")]
    TooLong { variant: OcsVariant, limit: usize, got: usize },
    #[error("exact enumeration needs fair coins, got bias {0}")]
    NonDyadic(f64),
    #[error(transparent)]
    Ocs(#[from] OcsError),
}

/// Probability weights usable on enumeration paths.
pub trait PathWeight: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> {
    /// Weight of a coin with `P(true) = p` landing on `outcome`.
    fn coin(p: f64, outcome: bool) -> Result<Self, EnumError>;
    fn to_f64(&self) -> f64;
}

impl PathWeight for f64 {
    fn coin(p: f64, outcome: bool) -> Result<Self, EnumError> {
        Ok(if outcome { p } else { 1.0 - p })
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl PathWeight for BigRational {
    fn coin(p: f64, _outcome: bool) -> Result<Self, EnumError> {
        if p == 0.5 {
            Ok(BigRational::new(BigInt::one(), BigInt::from(2)))
        } else {
            Err(EnumError::NonDyadic(p))
        }
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// A selector whose future behaviour is determined by a hashable key.
pub trait Enumerable: Selector + Clone {
    type Key: Hash + Eq + Clone;
    fn merge_key(&self) -> Self::Key;
}

impl Enumerable for OriginalOcs {
    type Key = crate::ocs::OcsState;
    fn merge_key(&self) -> Self::Key {
        self.state().clone()
    }
}

impl Enumerable for IndependentOcs {
    type Key = ();
    fn merge_key(&self) -> Self::Key {}
}

impl Enumerable for ImprovedOcs {
    type Key = Vec<(Candidate, NodeType, bool)>;
    fn merge_key(&self) -> Self::Key {
        self.graph().frontier()
    }
}

/// Replays a fixed prefix of coin outcomes, then answers `false`, logging
/// every draw.
struct Brancher<'a> {
    script: &'a [bool],
    log: Vec<(bool, f64)>,
}

impl Brancher<'_> {
    fn draw(&mut self, p: f64) -> bool {
        let b = self.script.get(self.log.len()).copied().unwrap_or(false);
        self.log.push((b, p));
        b
    }
}

impl CoinSource for Brancher<'_> {
    fn fair(&mut self) -> bool {
        self.draw(0.5)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.draw(p)
    }
}

/// One coin path through a selection: resulting state, choice and the drawn
/// coins as `(outcome, P(true))`.
type Branch<S> = (S, Candidate, Vec<(bool, f64)>);

fn branch_round<S: Selector + Clone>(sel: &S, pair: Pair) -> Result<Vec<Branch<S>>, OcsError> {
    let mut out = Vec::new();
    let mut script: Vec<bool> = Vec::new();
    loop {
        let mut s = sel.clone();
        let mut coins = Brancher { script: &script, log: Vec::new() };
        let c = s.select(pair, &mut coins)?;
        let log = coins.log;
        let next = log.iter().rposition(|(b, _)| !b);
        out.push((s, c, log.clone()));
        match next {
            None => break,
            Some(i) => {
                script = log[..i].iter().map(|x| x.0).collect();
                script.push(true);
            }
        }
    }
    Ok(out)
}

/// Distribution over outcome masks: bit `t` set means round `t` chose the
/// second candidate of its pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration<P> {
    pub pairs: Vec<Pair>,
    pub outcomes: BTreeMap<u64, P>,
    /// Distinct (state, outcome) classes expanded, summed over rounds.
    pub expanded: usize,
}

impl<P: PathWeight> Enumeration<P> {
    pub fn total(&self) -> P {
        self.outcomes.values().cloned().fold(P::zero(), |a, b| a + b)
    }

    pub fn chosen(&self, mask: u64, t: usize) -> Candidate {
        self.pairs[t].at(((mask >> t) & 1) as usize)
    }

    /// Rounds (indices into the sequence) in which `c` is a candidate.
    pub fn rounds_of(&self, c: Candidate) -> Vec<usize> {
        (0..self.pairs.len()).filter(|&t| self.pairs[t].contains(c)).collect()
    }

    /// Probability that `c` is chosen in none of the listed rounds.
    pub fn never_chosen_in(&self, c: Candidate, rounds: &[usize]) -> P {
        self.outcomes
            .iter()
            .filter(|(&mask, _)| rounds.iter().all(|&t| self.chosen(mask, t) != c))
            .fold(P::zero(), |acc, (_, w)| acc + w.clone())
    }

    pub fn never_chosen(&self, c: Candidate) -> P {
        self.never_chosen_in(c, &self.rounds_of(c))
    }

    /// Probability that round `t` chose its first candidate.
    pub fn first_chosen(&self, t: usize) -> P {
        self.outcomes
            .iter()
            .filter(|(&mask, _)| (mask >> t) & 1 == 0)
            .fold(P::zero(), |acc, (_, w)| acc + w.clone())
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        let mut cs: Vec<_> = self.pairs.iter().flat_map(|p| p.candidates()).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }
}

/// Enumerates `initial` on `pairs` (round ids must increase).
pub fn enumerate_with<S: Enumerable, P: PathWeight>(
    initial: S,
    pairs: &[Pair],
) -> Result<Enumeration<P>, EnumError> {
    assert!(pairs.len() <= 64, "outcome masks hold 64 rounds");
    let mut layer: HashMap<(S::Key, u64), (S, P)> = HashMap::new();
    layer.insert((initial.merge_key(), 0), (initial, P::one()));
    let mut expanded = 0;
    for (t, &pair) in pairs.iter().enumerate() {
        let mut next: HashMap<(S::Key, u64), (S, P)> = HashMap::new();
        for ((_, mask), (sel, weight)) in layer {
            expanded += 1;
            for (s, c, log) in branch_round(&sel, pair)? {
                let mut w = weight.clone();
                for (b, p) in log {
                    w = w * P::coin(p, b)?;
                }
                if w.is_zero() {
                    continue;
                }
                let bit = u64::from(c == pair.second) << t;
                let key = (s.merge_key(), mask | bit);
                match next.get_mut(&key) {
                    Some(entry) => entry.1 = entry.1.clone() + w,
                    None => {
                        next.insert(key, (s, w));
                    }
                }
            }
        }
        layer = next;
    }
    let mut outcomes: BTreeMap<u64, P> = BTreeMap::new();
    for ((_, mask), (_, w)) in layer {
        let e = outcomes.entry(mask).or_insert_with(P::zero);
        *e = e.clone() + w;
    }
    Ok(Enumeration { pairs: pairs.to_vec(), outcomes, expanded })
}

/// Rational-exact enumeration (original and independent selectors).
pub fn enumerate_exact(variant: OcsVariant, pairs: &[Pair]) -> Result<Enumeration<BigRational>, EnumError> {
    check_len(variant, pairs.len())?;
    match variant {
        OcsVariant::Original => enumerate_with(OriginalOcs::default(), pairs),
        OcsVariant::Independent => enumerate_with(IndependentOcs::default(), pairs),
        OcsVariant::Improved => enumerate_with(ImprovedOcs::optimal(), pairs),
    }
}

/// Floating-point enumeration, any variant.
pub fn enumerate_float(variant: OcsVariant, pairs: &[Pair]) -> Result<Enumeration<f64>, EnumError> {
    check_len(variant, pairs.len())?;
    match variant {
        OcsVariant::Original => enumerate_with(OriginalOcs::default(), pairs),
        OcsVariant::Independent => enumerate_with(IndependentOcs::default(), pairs),
        OcsVariant::Improved => enumerate_with(ImprovedOcs::optimal(), pairs),
    }
}

pub fn round_limit(variant: OcsVariant) -> usize {
    match variant {
        OcsVariant::Improved => MAX_ROUNDS_IMPROVED,
        _ => MAX_ROUNDS_EXACT,
    }
}

fn check_len(variant: OcsVariant, got: usize) -> Result<(), EnumError> {
    let limit = round_limit(variant);
    if got > limit {
        Err(EnumError::TooLong { variant, limit, got })
    } else {
        Ok(())
    }
}

/// Exact `f(0..=max_k)` for a rational γ.
pub fn f_table_exact(gamma: &BigRational, max_k: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::one(); max_k.max(1) + 1];
    for k in 2..=max_k {
        v[k] = &v[k - 1] - gamma * &v[k - 2];
    }
    v.truncate(max_k + 1);
    v
}

/// Pair sequence with round ids `0..n` from `(first, second)` tuples.
pub fn sequence(pairs: &[(Candidate, Candidate)]) -> Result<Vec<Pair>, OcsError> {
    pairs.iter().enumerate().map(|(t, &(a, b))| Pair::new(t, a, b)).collect()
}

/// Every sequence of ordered pairs over `n_candidates` with `1..=max_rounds`
/// rounds.
pub fn all_sequences(n_candidates: usize, max_rounds: usize) -> Vec<Vec<Pair>> {
    let choices: Vec<(usize, usize)> = (0..n_candidates)
        .flat_map(|a| (0..n_candidates).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for _ in 0..max_rounds {
        let mut next = Vec::new();
        for prefix in &frontier {
            for &c in &choices {
                let mut s = prefix.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().map(|s| sequence(s).expect("distinct by construction")));
        frontier = next;
    }
    out
}

/// All subsets of `items` (as index lists), including the empty one.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0u32..1 << items.len())
        .map(|bits| {
            items
                .iter()
                .enumerate()
                .filter(|(k, _)| bits >> k & 1 == 1)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect()
}

/// One row of the enumeration-vs-bound comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundRow {
    pub candidate: Candidate,
    pub rounds: Vec<usize>,
    pub runs: Vec<usize>,
    pub probability: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Never-chosen probabilities against `∏ 2^{-k} f(k)` over every nonempty
/// subset of every candidate's rounds, in exact arithmetic.
pub fn exact_bound_rows(en: &Enumeration<BigRational>, gamma: &BigRational) -> Vec<BoundRow> {
    let f = f_table_exact(gamma, en.pairs.len());
    let mut rows = Vec::new();
    for c in en.candidates() {
        for subset in subsets(&en.rounds_of(c)).into_iter().filter(|s| !s.is_empty()) {
            let runs = consecutive_runs(&en.pairs, c, &subset);
            let bound = runs.iter().fold(BigRational::one(), |acc, &k| {
                acc * &f[k] / BigRational::from_integer(BigInt::from(2).pow(k as u32))
            });
            let prob = en.never_chosen_in(c, &subset);
            rows.push(BoundRow {
                candidate: c,
                rounds: subset,
                runs,
                probability: PathWeight::to_f64(&prob),
                bound: PathWeight::to_f64(&bound),
                holds: !(prob - bound).is_positive(),
            });
        }
    }
    rows
}

/// As [`exact_bound_rows`] against `∏ 2^{-k} g(k)` at sender probability
/// `p`, with slack `tolerance`.
pub fn float_bound_rows(en: &Enumeration<f64>, p: f64, tolerance: f64) -> Result<Vec<BoundRow>, EnumError> {
    let g = crate::ocs::g_table(p, en.pairs.len())?;
    let mut rows = Vec::new();
    for c in en.candidates() {
        for subset in subsets(&en.rounds_of(c)).into_iter().filter(|s| !s.is_empty()) {
            let runs = consecutive_runs(&en.pairs, c, &subset);
            let bound = runs.iter().map(|&k| 0.5f64.powi(k as i32) * g.get(k)).product();
            let probability = en.never_chosen_in(c, &subset);
            rows.push(BoundRow {
                candidate: c,
                rounds: subset,
                runs,
                probability,
                bound,
                holds: probability <= bound + tolerance,
            });
        }
    }
    Ok(rows)
}

/// Enumerates `pairs` under `variant` and compares with its product bound:
/// exact with γ = 1/16 for the original selector, exact with γ = 0 for the
/// independent one, floating point with slack `tolerance` for the improved
/// one.
pub fn bound_table(variant: OcsVariant, pairs: &[Pair], tolerance: f64) -> Result<Vec<BoundRow>, EnumError> {
    match variant {
        OcsVariant::Original => Ok(exact_bound_rows(
            &enumerate_exact(variant, pairs)?,
            &BigRational::new(BigInt::one(), BigInt::from(16)),
        )),
        OcsVariant::Independent => Ok(exact_bound_rows(&enumerate_exact(variant, pairs)?, &BigRational::zero())),
        OcsVariant::Improved => {
            float_bound_rows(&enumerate_float(variant, pairs)?, ImprovedOcs::optimal().p(), tolerance)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn single_pair_is_fair() {
        let s = sequence(&[(0, 1)]).unwrap();
        for v in OcsVariant::ALL {
            let en = enumerate_float(v, &s).unwrap();
            assert!((en.never_chosen(0) - 0.5).abs() < 1e-15);
            assert!((en.never_chosen(1) - 0.5).abs() < 1e-15);
        }
        let en = enumerate_exact(OcsVariant::Original, &s).unwrap();
        assert_eq!(en.never_chosen(0), q(1, 2));
        assert_eq!(en.total(), q(1, 1));
    }

    #[test]
    fn original_two_consecutive_rounds() {
        // correlated with probability 1/16 (oblivious, m = 0, adaptive, m = 0)
        // and then 0 is chosen exactly once: 1/4 - 1/64
        let s = sequence(&[(0, 1), (0, 2)]).unwrap();
        let en = enumerate_exact(OcsVariant::Original, &s).unwrap();
        assert_eq!(en.never_chosen(0), q(15, 64));
        assert_eq!(en.total(), q(1, 1));
        let ind = enumerate_exact(OcsVariant::Independent, &s).unwrap();
        assert_eq!(ind.never_chosen(0), q(1, 4));
    }

    #[test]
    fn improved_two_consecutive_rounds() {
        let (p, gamma) = crate::ocs::optimal_p();
        let bound = 0.25 * (1.0 - gamma);
        // only the 0-arc can carry the correlation
        let s = sequence(&[(0, 1), (0, 2)]).unwrap();
        let en = enumerate_float(OcsVariant::Improved, &s).unwrap();
        assert!((en.never_chosen(0) - 0.25 * (1.0 - p * (1.0 - p))).abs() < 1e-12);
        assert!(en.never_chosen(0) < bound);
        assert!((en.total() - 1.0).abs() < 1e-12);
        // the receiver also has an in-arc through 2: the bound is tight
        let s = sequence(&[(0, 1), (2, 3), (0, 2)]).unwrap();
        let en = enumerate_float(OcsVariant::Improved, &s).unwrap();
        assert!((en.never_chosen(0) - bound).abs() < 1e-12);
    }

    #[test]
    fn improved_subset_after_a_shared_sender() {
        // round 0 as sender with receivers 1 (via 0) and 2 (via 1) makes the
        // decisions of 0 in rounds 1 and 2 equal, so the subset {1, 2} is left
        // out more often than the two-round product bound allows
        use crate::ocs::RngCoins;
        use rand::SeedableRng;
        let s = sequence(&[(0, 1), (0, 2), (0, 1)]).unwrap();
        let en = enumerate_float(OcsVariant::Improved, &s).unwrap();
        let exact = en.never_chosen_in(0, &[1, 2]);
        let bound = 0.25 * (1.0 - crate::ocs::optimal_p().1);
        assert!(exact > bound + 0.03);
        // every full round set still meets its bound
        for c in en.candidates() {
            let rounds = en.rounds_of(c);
            let runs = consecutive_runs(&s, c, &rounds);
            assert_eq!(runs.len(), 1);
            let g = crate::ocs::g_table(crate::ocs::optimal_p().0, 3).unwrap();
            assert!(en.never_chosen(c) <= 0.5f64.powi(runs[0] as i32) * g.get(runs[0]) + 1e-12);
        }
        // independent simulation of the same event
        let trials = 400_000;
        let mut rng = RngCoins(rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let mut hits = 0;
        for _ in 0..trials {
            let mut ocs = ImprovedOcs::optimal();
            let picks: Vec<Candidate> = s.iter().map(|&p| ocs.select(p, &mut rng).unwrap()).collect();
            hits += usize::from(picks[1] != 0 && picks[2] != 0);
        }
        let freq = hits as f64 / trials as f64;
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((freq - exact).abs() < 5.0 * se, "{freq} vs {exact}");
    }

    #[test]
    fn marginals_are_one_half() {
        let s = sequence(&[(0, 1), (1, 2), (0, 2), (2, 1), (0, 1), (1, 0)]).unwrap();
        let en = enumerate_exact(OcsVariant::Original, &s).unwrap();
        for t in 0..s.len() {
            assert_eq!(en.first_chosen(t), q(1, 2));
        }
        let en = enumerate_float(OcsVariant::Improved, &s).unwrap();
        for t in 0..s.len() {
            assert!((en.first_chosen(t) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn merged_matches_unmerged_paths() {
        // merging on the frontier gives the same distribution as merging on
        // a key that keeps the whole graph
        #[derive(Clone)]
        struct FullGraph(ImprovedOcs);
        impl Selector for FullGraph {
            fn select(&mut self, pair: Pair, coins: &mut dyn CoinSource) -> Result<Candidate, OcsError> {
                self.0.select(pair, coins)
            }
            fn gamma(&self) -> f64 {
                self.0.gamma()
            }
        }
        impl Enumerable for FullGraph {
            type Key = Vec<(usize, Candidate, bool)>;
            fn merge_key(&self) -> Self::Key {
                self.0
                    .graph()
                    .nodes()
                    .map(|(r, n)| (r, n.choice, n.node_type == NodeType::Sender))
                    .collect()
            }
        }
        let s = sequence(&[(0, 1), (1, 2), (0, 1), (2, 0)]).unwrap();
        let a: Enumeration<f64> = enumerate_with(FullGraph(ImprovedOcs::optimal()), &s).unwrap();
        let b = enumerate_float(OcsVariant::Improved, &s).unwrap();
        for (m, w) in &a.outcomes {
            assert!((w - b.outcomes[m]).abs() < 1e-12);
        }
        assert!(b.expanded < a.expanded);
    }

    #[test]
    fn limits() {
        let long: Vec<(usize, usize)> = (0..13).map(|t| (t % 2, 2)).collect();
        let s = sequence(&long).unwrap();
        assert!(matches!(
            enumerate_exact(OcsVariant::Original, &s),
            Err(EnumError::TooLong { limit: 12, got: 13, .. })
        ));
        assert!(matches!(
            enumerate_float(OcsVariant::Improved, &s[..8]),
            Err(EnumError::TooLong { limit: 7, got: 8, .. })
        ));
        assert!(matches!(
            enumerate_exact(OcsVariant::Improved, &s[..2]),
            Err(EnumError::NonDyadic(_))
        ));
        let en = enumerate_exact(OcsVariant::Original, &s[..12]).unwrap();
        assert_eq!(en.total(), q(1, 1));
    }

    #[test]
    fn sequence_counts() {
        let all = all_sequences(3, 5);
        assert_eq!(all.len(), 6 + 36 + 216 + 1296 + 7776);
        assert_eq!(subsets(&[4, 7]).len(), 4);
    }

    #[test]
    fn bounds_hold_on_a_mixed_sequence() {
        let s = sequence(&[(0, 1), (0, 2), (1, 2), (0, 1), (2, 0)]).unwrap();
        for v in OcsVariant::ALL {
            let rows = bound_table(v, &s, 1e-9).unwrap();
            assert!(!rows.is_empty());
            assert!(rows.iter().all(|r| r.holds), "{v}: {:?}", rows.iter().find(|r| !r.holds));
        }
    }
}
