//! The marker-based OCS and the independent-rounding baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Candidate, CoinSource, OcsError, Pair, RoundClock, Selector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Marker {
    Matched,
    Unmatched,
    Unknown,
}

/// Per-candidate markers; absent entries are `Unknown`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct OcsState {
    markers: BTreeMap<Candidate, Marker>,
}

impl OcsState {
    pub fn marker(&self, c: Candidate) -> Marker {
        self.markers.get(&c).copied().unwrap_or(Marker::Unknown)
    }

    fn set(&mut self, c: Candidate, m: Marker) {
        if m == Marker::Unknown {
            self.markers.remove(&c);
        } else {
            self.markers.insert(c, m);
        }
    }

    /// Candidates with a non-`Unknown` marker.
    pub fn known(&self) -> impl Iterator<Item = (Candidate, Marker)> + '_ {
        self.markers.iter().map(|(&c, &m)| (c, m))
    }
}

/// Each round is oblivious or adaptive with probability 1/2.
///
/// An oblivious step picks `ℓ, m` uniformly, returns `i_ℓ`, and leaves a
/// marker on `i_m` telling its next round whether `i_m` was picked here. An
/// adaptive step picks `m` uniformly and, if `i_m` carries a marker, makes the
/// opposite decision for `i_m`; otherwise it flips a coin. Only the markers of
/// the current pair change.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct OriginalOcs {
    state: OcsState,
    clock: RoundClock,
}

impl OriginalOcs {
    pub fn state(&self) -> &OcsState {
        &self.state
    }
}

impl Selector for OriginalOcs {
    fn select(&mut self, pair: Pair, coins: &mut dyn CoinSource) -> Result<Candidate, OcsError> {
        pair.validate()?;
        self.clock.advance(pair.round)?;
        let oblivious = coins.fair();
        let pick = if oblivious {
            let l = usize::from(coins.fair());
            let m = usize::from(coins.fair());
            self.state.set(pair.at(1 - m), Marker::Unknown);
            let marker = if l == m { Marker::Matched } else { Marker::Unmatched };
            self.state.set(pair.at(m), marker);
            l
        } else {
            let m = usize::from(coins.fair());
            let l = match self.state.marker(pair.at(m)) {
                Marker::Matched => 1 - m,
                Marker::Unmatched => m,
                Marker::Unknown => usize::from(coins.fair()),
            };
            self.state.set(pair.first, Marker::Unknown);
            self.state.set(pair.second, Marker::Unknown);
            l
        };
        Ok(pair.at(pick))
    }

    fn gamma(&self) -> f64 {
        1.0 / 16.0
    }
}

/// A fresh fair coin per round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IndependentOcs {
    clock: RoundClock,
}

impl Selector for IndependentOcs {
    fn select(&mut self, pair: Pair, coins: &mut dyn CoinSource) -> Result<Candidate, OcsError> {
        pair.validate()?;
        self.clock.advance(pair.round)?;
        Ok(pair.at(usize::from(coins.fair())))
    }

    fn gamma(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocs::RngCoins;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Replays a fixed list of coin outcomes.
    struct Script(Vec<bool>);

    impl CoinSource for Script {
        fn fair(&mut self) -> bool {
            self.0.remove(0)
        }
        fn bernoulli(&mut self, _: f64) -> bool {
            self.0.remove(0)
        }
    }

    #[test]
    fn oblivious_step_sets_marker() {
        let mut ocs = OriginalOcs::default();
        // oblivious, l = second, m = second -> i_2 chosen, marker matched
        let pick = ocs
            .select(Pair::new(0, 3, 5).unwrap(), &mut Script(vec![true, true, true]))
            .unwrap();
        assert_eq!(pick, 5);
        assert_eq!(ocs.state().marker(5), Marker::Matched);
        assert_eq!(ocs.state().marker(3), Marker::Unknown);

        // adaptive step reading 5's marker: picks the opposite for 5
        let pick = ocs
            .select(Pair::new(1, 5, 7).unwrap(), &mut Script(vec![false, false]))
            .unwrap();
        assert_eq!(pick, 7);
        assert_eq!(ocs.state().known().count(), 0);
    }

    #[test]
    fn adaptive_unmatched_marker_picks_candidate() {
        let mut ocs = OriginalOcs::default();
        // oblivious, l = first, m = second -> 1 picked, 2 marked unmatched
        ocs.select(Pair::new(0, 1, 2).unwrap(), &mut Script(vec![true, false, true]))
            .unwrap();
        assert_eq!(ocs.state().marker(2), Marker::Unmatched);
        let pick = ocs
            .select(Pair::new(1, 2, 3).unwrap(), &mut Script(vec![false, false]))
            .unwrap();
        assert_eq!(pick, 2);
    }

    #[test]
    fn touches_only_pair_markers() {
        let mut ocs = OriginalOcs::default();
        let mut coins = RngCoins(ChaCha8Rng::seed_from_u64(9));
        let pairs = [(0, 1), (2, 3), (1, 2), (0, 3), (1, 3), (0, 2)];
        for (round, &(a, b)) in pairs.iter().cycle().take(60).enumerate() {
            let before = ocs.state().clone();
            ocs.select(Pair::new(round, a, b).unwrap(), &mut coins).unwrap();
            for c in 0..4 {
                if c != a && c != b {
                    assert_eq!(before.marker(c), ocs.state().marker(c));
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(Pair::new(0, 4, 4), Err(OcsError::DegeneratePair(4)));
        let mut ocs = OriginalOcs::default();
        let bad = Pair { round: 0, first: 1, second: 1 };
        let mut coins = RngCoins(ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ocs.select(bad, &mut coins), Err(OcsError::DegeneratePair(1)));
        ocs.select(Pair::new(3, 0, 1).unwrap(), &mut coins).unwrap();
        assert_eq!(
            ocs.select(Pair::new(3, 0, 1).unwrap(), &mut coins),
            Err(OcsError::RoundOrder { last: 3, got: 3 })
        );
        let mut ind = IndependentOcs::default();
        assert_eq!(ind.select(bad, &mut coins), Err(OcsError::DegeneratePair(1)));
    }
}
