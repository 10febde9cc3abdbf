//! The never-chosen recurrences and bounds.

use serde::{Deserialize, Serialize};

use super::{Candidate, OcsError, Pair};

/// `f(0) = f(1) = 1`, `f(k) = f(k-1) - γ f(k-2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub gamma: f64,
    pub values: Vec<f64>,
}

impl RecurrenceTable {
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), OcsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(OcsError::Parameter { name, value })
    }
}

fn two_term(coef: f64, max_k: usize) -> Vec<f64> {
    let mut v = vec![1.0; max_k.max(1) + 1];
    for k in 2..=max_k {
        v[k] = v[k - 1] - coef * v[k - 2];
    }
    v.truncate(max_k + 1);
    v
}

/// Table of `f(0..=max_k)` for the γ-OCS recurrence.
pub fn f_table(gamma: f64, max_k: usize) -> Result<RecurrenceTable, OcsError> {
    check_unit("gamma", gamma)?;
    Ok(RecurrenceTable {
        gamma,
        values: two_term(gamma, max_k),
    })
}

/// `g(0) = g(1) = 1`, `g(k) = g(k-1) - p(1-p)(1-p/2) g(k-2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTable {
    pub p: f64,
    pub values: Vec<f64>,
}

impl GTable {
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }
}

pub fn g_table(p: f64, max_k: usize) -> Result<GTable, OcsError> {
    check_unit("p", p)?;
    Ok(GTable {
        p,
        values: two_term(super::sender_gain(p), max_k),
    })
}

/// `∏ 2^{-k} (1-γ)^{k-1}` over the run lengths.
pub fn never_chosen_bound(gamma: f64, lengths: &[usize]) -> Result<f64, OcsError> {
    check_unit("gamma", gamma)?;
    lengths.iter().try_fold(1.0, |acc, &k| {
        if k < 1 {
            return Err(OcsError::EmptyRun);
        }
        Ok(acc * 0.5f64.powi(k as i32) * (1.0 - gamma).powi(k as i32 - 1))
    })
}

/// Splits the rounds of `candidate` selected by `subset` (indices into
/// `pairs`) into maximal runs of consecutive rounds: two selected rounds are
/// in the same run when no round involving the candidate lies between them
/// outside the subset. Returns the run lengths in order.
pub fn consecutive_runs(pairs: &[Pair], candidate: Candidate, subset: &[usize]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = 0;
    for (idx, pair) in pairs.iter().enumerate() {
        if !pair.contains(candidate) {
            continue;
        }
        if subset.contains(&idx) {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocs::optimal_p;

    #[test]
    fn f_examples() {
        let f = f_table(1.0 / 16.0, 6).unwrap();
        assert_eq!(f.get(0), 1.0);
        assert_eq!(f.get(1), 1.0);
        assert_eq!(f.get(2), 15.0 / 16.0);
        assert_eq!(f.get(3), 7.0 / 8.0);
        let zero = f_table(0.0, 10).unwrap();
        assert!(zero.values.iter().all(|&v| v == 1.0));
        assert_eq!(f_table(0.3, 0).unwrap().values, vec![1.0]);
        assert!(f_table(1.5, 3).is_err());
        assert!(f_table(-0.1, 3).is_err());
    }

    #[test]
    fn f_monotone_and_geometric() {
        for gamma in [0.0, 1.0 / 16.0, 0.1, 1.0 / (3.0 * 3f64.sqrt()), 0.25] {
            let f = f_table(gamma, 30).unwrap();
            for k in 1..=30 {
                assert!(f.get(k) <= f.get(k - 1));
                assert!(f.get(k) <= (1.0 - gamma).powi(k as i32 - 1) + 1e-15);
            }
        }
    }

    #[test]
    fn g_examples() {
        let (p, gamma) = optimal_p();
        let g = g_table(p, 10).unwrap();
        assert_eq!(g.get(0), 1.0);
        assert_eq!(g.get(1), 1.0);
        assert!((g.get(2) - (1.0 - 1.0 / (3.0 * 3f64.sqrt()))).abs() < 1e-15);
        assert!((g.get(2) - 0.807550).abs() < 1e-6);
        let f = f_table(1.0 / 16.0, 10).unwrap();
        assert!(gamma > 1.0 / 16.0);
        for k in 2..=10 {
            assert!(g.get(k) <= f.get(k));
            assert!(g.get(k) <= (1.0 - gamma).powi(k as i32 - 1) + 1e-15);
        }
        assert!(g_table(0.0, 8).unwrap().values.iter().all(|&v| v == 1.0));
        assert!(g_table(1.1, 2).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(never_chosen_bound(0.3, &[1]).unwrap(), 0.5);
        assert_eq!(never_chosen_bound(1.0 / 16.0, &[2]).unwrap(), 15.0 / 64.0);
        assert_eq!(never_chosen_bound(1.0 / 16.0, &[1, 1]).unwrap(), 0.25);
        assert_eq!(never_chosen_bound(0.1, &[]).unwrap(), 1.0);
        assert_eq!(never_chosen_bound(0.1, &[2, 0]), Err(OcsError::EmptyRun));
    }

    #[test]
    fn runs_decomposition() {
        let p = |r, a, b| Pair::new(r, a, b).unwrap();
        let pairs = [p(0, 0, 1), p(1, 1, 2), p(2, 0, 2), p(3, 0, 1), p(4, 2, 1)];
        // candidate 0 appears in rounds 0, 2, 3: all one run
        assert_eq!(consecutive_runs(&pairs, 0, &[0, 2, 3]), vec![3]);
        // dropping round 2 splits the run
        assert_eq!(consecutive_runs(&pairs, 0, &[0, 3]), vec![1, 1]);
        assert_eq!(consecutive_runs(&pairs, 1, &[0, 1, 3, 4]), vec![4]);
        assert_eq!(consecutive_runs(&pairs, 1, &[]), Vec::<usize>::new());
    }
}
