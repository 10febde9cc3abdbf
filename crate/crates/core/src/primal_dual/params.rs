use serde::{Deserialize, Serialize};

use crate::lp::gain_share::{build_lp, unmatched_floor, LpError};
use crate::step_fn::Level;

/// Reference shares for `γ = 1/16, κ = 3/2, k_max = 7` (8 decimals).
pub const TABLE_ORIGINAL_A: [f64; 8] = [
    0.24749974, 0.13687460, 0.06419862, 0.03015109, 0.01422029, 0.00679622, 0.00338141, 0.00187856,
];
pub const TABLE_ORIGINAL_B: [f64; 8] = [
    0.25250026, 0.12875040, 0.06031309, 0.02821378, 0.01313824, 0.00602809, 0.00262999, 0.00093928,
];
pub const TABLE_ORIGINAL_RATIO: f64 = 0.50500053;

/// Reference shares for `γ = 1/(3√3), κ = 3/2, k_max = 7` (8 decimals).
pub const TABLE_IMPROVED_A: [f64; 8] = [
    0.24269440, 0.16215413, 0.06548904, 0.02646573, 0.01072054, 0.00438021, 0.00184589, 0.00086124,
];
pub const TABLE_IMPROVED_B: [f64; 8] = [
    0.25730560, 0.13595839, 0.05488133, 0.02213681, 0.00890394, 0.00354367, 0.00135357, 0.00043062,
];
pub const TABLE_IMPROVED_RATIO: f64 = 0.51461;

/// Rounding slack accepted when loading the 8-digit reference tables.
pub const LOAD_TOLERANCE: f64 = 1e-7;

/// Gain-sharing shares `a(0..=k_max)`, `b(0..=k_max)` with the OCS quality
/// `γ`, the deterministic premium `κ` and the certified ratio `Γ`. Shares are
/// zero beyond `k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainShareParams {
    pub gamma: f64,
    pub kappa: f64,
    #[serde(rename = "kmax")]
    pub k_max: usize,
    #[serde(rename = "Gamma")]
    pub ratio: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GainShareParams {
    /// Builds and checks parameters against every row of the finite program
    /// at `tolerance`.
    pub fn new(
        gamma: f64,
        kappa: f64,
        ratio: f64,
        a: Vec<f64>,
        b: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self, String> {
        if a.len() != b.len() || a.is_empty() {
            return Err(format!("share vectors have lengths {} and {}", a.len(), b.len()));
        }
        let params = Self {
            gamma,
            kappa,
            k_max: a.len() - 1,
            ratio,
            a,
            b,
        };
        params.check(tolerance)?;
        Ok(params)
    }

    pub fn table_original() -> Self {
        Self::new(
            1.0 / 16.0,
            1.5,
            TABLE_ORIGINAL_RATIO,
            TABLE_ORIGINAL_A.to_vec(),
            TABLE_ORIGINAL_B.to_vec(),
            LOAD_TOLERANCE,
        )
        .expect("reference table is feasible")
    }

    pub fn table_improved() -> Self {
        Self::new(
            crate::ocs::optimal_p().1,
            1.5,
            TABLE_IMPROVED_RATIO,
            TABLE_IMPROVED_A.to_vec(),
            TABLE_IMPROVED_B.to_vec(),
            LOAD_TOLERANCE,
        )
        .expect("reference table is feasible")
    }

    /// Largest row violation of the finite program at these values.
    pub fn max_violation(&self) -> Result<f64, LpError> {
        let lp = build_lp(self.gamma, self.kappa, self.k_max)?;
        Ok(lp.max_violation(self.ratio, &self.a, &self.b))
    }

    pub fn check(&self, tolerance: f64) -> Result<(), String> {
        if self.a.len() != self.k_max + 1 || self.b.len() != self.k_max + 1 {
            return Err(format!("share vectors must have k_max + 1 = {} entries", self.k_max + 1));
        }
        let v = self.max_violation().map_err(|e| e.to_string())?;
        if v > tolerance {
            return Err(format!("constraint violation {v:e} exceeds {tolerance:e}"));
        }
        Ok(())
    }

    /// `a(k)`; zero beyond `k_max` and at infinity.
    pub fn a(&self, k: Level) -> f64 {
        k.finite().and_then(|k| self.a.get(k as usize)).copied().unwrap_or(0.0)
    }

    pub fn b(&self, k: Level) -> f64 {
        k.finite().and_then(|k| self.b.get(k as usize)).copied().unwrap_or(0.0)
    }

    /// `Σ_{0≤ℓ<k} a(ℓ)`, the invariant lower bound on `α_i(w)`; the whole sum
    /// at infinity.
    pub fn alpha_floor(&self, k: Level) -> f64 {
        let n = match k {
            Level::Finite(k) => (k as usize).min(self.a.len()),
            Level::Infinite => self.a.len(),
        };
        self.a[..n].iter().sum()
    }

    /// `Σ_{k≤ℓ≤k_max} a(ℓ)`: the deterministic top-up; zero at infinity.
    pub fn remaining_shares(&self, k: Level) -> f64 {
        match k {
            Level::Finite(k) => self.a.iter().skip(k as usize).sum(),
            Level::Infinite => 0.0,
        }
    }

    /// `2^{-k-1} (1-γ)^{k-1} γ` for `k ≥ 1`: the amount prepaid to `α_i(w)`
    /// above the edge weight in a randomized round.
    pub fn prepaid(&self, k: Level) -> f64 {
        match k {
            Level::Finite(k) if k >= 1 => {
                0.5f64.powi(k as i32 + 1) * (1.0 - self.gamma).powi(k as i32 - 1) * self.gamma
            }
            _ => 0.0,
        }
    }

    /// `2^{-k} (1-γ)^{max(k-1,0)}`, zero at infinity.
    pub fn unmatched_floor(&self, k: Level) -> f64 {
        match k {
            Level::Finite(k) => unmatched_floor(self.gamma, k as usize),
            Level::Infinite => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_load() {
        let t1 = GainShareParams::table_original();
        assert_eq!(t1.k_max, 7);
        let s: f64 = t1.a.iter().sum();
        assert!((s - 0.50500053).abs() < 1e-7);
        let t2 = GainShareParams::table_improved();
        assert!(t2.max_violation().unwrap() <= LOAD_TOLERANCE);
    }

    #[test]
    fn share_accessors() {
        let t = GainShareParams::table_original();
        assert_eq!(t.a(Level::Finite(0)), 0.24749974);
        assert_eq!(t.a(Level::Finite(8)), 0.0);
        assert_eq!(t.b(Level::Infinite), 0.0);
        assert_eq!(t.alpha_floor(Level::ZERO), 0.0);
        assert_eq!(t.alpha_floor(Level::Finite(1)), 0.24749974);
        assert_eq!(t.alpha_floor(Level::Finite(20)), t.alpha_floor(Level::Infinite));
        assert_eq!(t.remaining_shares(Level::ZERO), t.alpha_floor(Level::Infinite));
        assert_eq!(t.remaining_shares(Level::Infinite), 0.0);
        assert_eq!(t.remaining_shares(Level::Finite(9)), 0.0);
        assert_eq!(t.prepaid(Level::ZERO), 0.0);
        assert_eq!(t.prepaid(Level::Finite(1)), 0.25 / 16.0);
        assert_eq!(t.unmatched_floor(Level::Finite(2)), 0.25 * 15.0 / 16.0);
    }

    #[test]
    fn rejects_infeasible() {
        let mut a = TABLE_ORIGINAL_A.to_vec();
        a[0] += 0.01;
        assert!(GainShareParams::new(1.0 / 16.0, 1.5, 0.505, a, TABLE_ORIGINAL_B.to_vec(), 1e-7).is_err());
        assert!(GainShareParams::new(1.0 / 16.0, 1.5, 0.5, vec![0.3], vec![], 1e-7).is_err());
    }

    #[test]
    fn json_field_names() {
        let t = GainShareParams::table_original();
        let v: serde_json::Value = serde_json::to_value(&t).unwrap();
        for key in ["gamma", "kappa", "kmax", "Gamma", "a", "b"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
