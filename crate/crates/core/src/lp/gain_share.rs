//! The finite gain-sharing program.
//!
//! Variables are `Γ, a(0..=k_max), b(0..=k_max)`, all nonnegative, and the
//! objective is `max Γ`. Shares beyond `k_max` are fixed to zero. Rows, in
//! order:
//!
//! 1. `Σ_{k≤ℓ≤k_max} a(ℓ) + κ b(k) ≤ 2^{-k} (1-γ)^{max(k-1,0)}` for every `k`
//!    (deterministic gain split);
//! 2. `a(0) + b(0) ≤ 1/2`;
//! 3. `a(k) + b(k) ≤ 2^{-k-1} (1-γ)^{k-1} (1+γ)` for `k ≥ 1` (randomized
//!    gain split);
//! 4. `a(0) ≥ γ/2` (prepaid share);
//! 5. `Σ a(ℓ) ≥ Γ` (feasibility once matched deterministically);
//! 6. `Σ_{ℓ<k} a(ℓ) + 2 b(k) ≥ Γ` for every `k`;
//! 7. `Σ_{ℓ≤k} a(ℓ) + κ b(k) ≥ Γ` for every `k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::simplex::{LinearProgram, LpStatus, Row, Sense};
use crate::primal_dual::GainShareParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("gamma = {0} outside [0, 1]")]
    Gamma(f64),
    #[error("kappa = {0} outside [0, 2]")]
    Kappa(f64),
    #[error("k_max must be at least 1")]
    KMax,
    #[error("solver finished with status {0:?}")]
    Status(LpStatus),
}

/// The assembled program for given `(γ, κ, k_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub gamma: f64,
    pub kappa: f64,
    pub k_max: usize,
    pub program: LinearProgram,
}

impl LpInstance {
    pub fn n_vars(&self) -> usize {
        self.program.n_vars()
    }

    pub fn n_rows(&self) -> usize {
        self.program.rows.len()
    }

    /// Column of `Γ`.
    pub fn ratio_col(&self) -> usize {
        0
    }

    pub fn a_col(&self, k: usize) -> usize {
        1 + k
    }

    pub fn b_col(&self, k: usize) -> usize {
        2 + self.k_max + k
    }

    /// Packs `(Γ, a, b)` into a variable vector.
    pub fn pack(&self, ratio: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_vars()];
        x[0] = ratio;
        for k in 0..=self.k_max {
            x[self.a_col(k)] = a.get(k).copied().unwrap_or(0.0);
            x[self.b_col(k)] = b.get(k).copied().unwrap_or(0.0);
        }
        x
    }

    /// Largest violation of any row or sign constraint at `(Γ, a, b)`.
    pub fn max_violation(&self, ratio: f64, a: &[f64], b: &[f64]) -> f64 {
        self.program.max_violation(&self.pack(ratio, a, b))
    }

    /// Largest `Γ` for which `(a, b)` satisfies every `≥ Γ` row.
    pub fn best_ratio(&self, a: &[f64], b: &[f64]) -> f64 {
        let x = self.pack(0.0, a, b);
        self.program
            .rows
            .iter()
            .filter(|r| r.coeffs[0] != 0.0)
            .map(|r| r.activity(&x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `2^{-k} (1-γ)^{max(k-1,0)}`.
pub fn unmatched_floor(gamma: f64, k: usize) -> f64 {
    0.5f64.powi(k as i32) * (1.0 - gamma).powi(k.saturating_sub(1) as i32)
}

pub fn build_lp(gamma: f64, kappa: f64, k_max: usize) -> Result<LpInstance, LpError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LpError::Gamma(gamma));
    }
    if !(0.0..=2.0).contains(&kappa) {
        return Err(LpError::Kappa(kappa));
    }
    if k_max < 1 {
        return Err(LpError::KMax);
    }
    let n = 2 * (k_max + 1) + 1;
    let a = |k: usize| 1 + k;
    let b = |k: usize| 2 + k_max + k;
    let mut rows = Vec::new();
    let mut push = |label: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64| {
        let mut coeffs = vec![0.0; n];
        for (col, c) in terms {
            coeffs[col] += c;
        }
        rows.push(Row { label, coeffs, sense, rhs });
    };

    for k in 0..=k_max {
        let mut t: Vec<_> = (k..=k_max).map(|l| (a(l), 1.0)).collect();
        t.push((b(k), kappa));
        push(format!("deterministic[{k}]"), t, Sense::Le, unmatched_floor(gamma, k));
    }
    push("randomized[0]".into(), vec![(a(0), 1.0), (b(0), 1.0)], Sense::Le, 0.5);
    for k in 1..=k_max {
        let rhs = 0.5f64.powi(k as i32 + 1) * (1.0 - gamma).powi(k as i32 - 1) * (1.0 + gamma);
        push(format!("randomized[{k}]"), vec![(a(k), 1.0), (b(k), 1.0)], Sense::Le, rhs);
    }
    push("prepaid".into(), vec![(a(0), 1.0)], Sense::Ge, gamma / 2.0);
    let mut t: Vec<_> = (0..=k_max).map(|l| (a(l), 1.0)).collect();
    t.push((0, -1.0));
    push("alpha_infinity".into(), t, Sense::Ge, 0.0);
    for k in 0..=k_max {
        let mut t: Vec<_> = (0..k).map(|l| (a(l), 1.0)).collect();
        t.push((b(k), 2.0));
        t.push((0, -1.0));
        push(format!("not_chosen[{k}]"), t, Sense::Ge, 0.0);
    }
    for k in 0..=k_max {
        let mut t: Vec<_> = (0..=k).map(|l| (a(l), 1.0)).collect();
        t.push((b(k), kappa));
        t.push((0, -1.0));
        push(format!("chosen[{k}]"), t, Sense::Ge, 0.0);
    }

    let mut var_names = vec!["Gamma".to_string()];
    var_names.extend((0..=k_max).map(|k| format!("a{k}")));
    var_names.extend((0..=k_max).map(|k| format!("b{k}")));
    let mut objective = vec![0.0; n];
    objective[0] = 1.0;
    Ok(LpInstance {
        gamma,
        kappa,
        k_max,
        program: LinearProgram {
            var_names,
            objective,
            rows,
        },
    })
}

/// Solver output: the shares, the certified ratio and quality figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    #[serde(flatten)]
    pub params: GainShareParams,
    pub status: LpStatus,
    pub max_violation: f64,
    pub max_reduced_profit: f64,
    pub pivots: usize,
}

pub fn solve_lp(lp: &LpInstance) -> Result<LpSolution, LpError> {
    let out = lp.program.solve();
    if out.status != LpStatus::Optimal {
        return Err(LpError::Status(out.status));
    }
    let k = lp.k_max;
    // clip round-off below zero; the violation below is measured after this
    let x: Vec<f64> = out.x.iter().map(|&v| if v < 0.0 && v > -1e-12 { 0.0 } else { v }).collect();
    let a = (0..=k).map(|l| x[lp.a_col(l)]).collect::<Vec<_>>();
    let b = (0..=k).map(|l| x[lp.b_col(l)]).collect::<Vec<_>>();
    let ratio = x[lp.ratio_col()];
    Ok(LpSolution {
        max_violation: lp.max_violation(ratio, &a, &b),
        params: GainShareParams {
            gamma: lp.gamma,
            kappa: lp.kappa,
            k_max: k,
            ratio,
            a,
            b,
        },
        status: out.status,
        max_reduced_profit: out.max_reduced_profit,
        pivots: out.pivots,
    })
}

/// `Γ` for each `κ` at fixed `(γ, k_max)`; independent solves run in
/// parallel.
pub fn kappa_sweep(gamma: f64, k_max: usize, kappas: &[f64]) -> Result<Vec<(f64, f64)>, LpError> {
    use rayon::prelude::*;
    kappas
        .par_iter()
        .map(|&kappa| {
            let sol = solve_lp(&build_lp(gamma, kappa, k_max)?)?;
            Ok((kappa, sol.params.ratio))
        })
        .collect()
}

/// Renders `(k, a(k), b(k))` as CSV.
pub fn share_table_csv(params: &GainShareParams) -> String {
    let mut out = String::from("k,a,b\n");
    for (k, (a, b)) in params.a.iter().zip(&params.b).enumerate() {
        out.push_str(&format!("{k},{a:.8},{b:.8}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primal_dual::params::{TABLE_IMPROVED_A, TABLE_IMPROVED_B, TABLE_ORIGINAL_A, TABLE_ORIGINAL_B};

    const G_ORIG: f64 = 1.0 / 16.0;

    fn g_improved() -> f64 {
        1.0 / (3.0 * 3f64.sqrt())
    }

    #[test]
    fn row_counts() {
        let lp = build_lp(G_ORIG, 1.5, 7).unwrap();
        assert_eq!(lp.n_vars(), 17);
        // 8 + 1 + 7 + 1 + 1 + 8 + 8
        assert_eq!(lp.n_rows(), 34);
        let small = build_lp(G_ORIG, 1.5, 1).unwrap();
        assert_eq!(small.n_vars(), 5);
        assert_eq!(small.n_rows(), 10);
    }

    #[test]
    fn gamma_zero_rhs() {
        let lp = build_lp(0.0, 1.5, 4).unwrap();
        for k in 0..=4 {
            let row = &lp.program.rows[k];
            assert_eq!(row.rhs, 0.5f64.powi(k as i32));
        }
        // the k = 0 exponent is zero for any gamma
        let lp = build_lp(0.3, 1.5, 4).unwrap();
        assert_eq!(lp.program.rows[0].rhs, 1.0);
        assert_eq!(lp.program.rows[1].rhs, 0.5);
        assert!((lp.program.rows[2].rhs - 0.25 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn invalid_ranges() {
        assert_eq!(build_lp(1.2, 1.5, 7).unwrap_err(), LpError::Gamma(1.2));
        assert_eq!(build_lp(0.1, 2.5, 7).unwrap_err(), LpError::Kappa(2.5));
        assert_eq!(build_lp(0.1, 1.5, 0).unwrap_err(), LpError::KMax);
    }

    #[test]
    fn original_table() {
        let sol = solve_lp(&build_lp(G_ORIG, 1.5, 7).unwrap()).unwrap();
        assert!((sol.params.ratio - 0.50500053).abs() < 1e-6, "{}", sol.params.ratio);
        assert!((sol.params.a[0] - 0.24749974).abs() < 1e-6, "{:?}", sol.params.a);
        assert!(sol.max_violation <= 1e-9);
        assert!(sol.max_reduced_profit <= 1e-9);
    }

    #[test]
    fn improved_table() {
        let sol = solve_lp(&build_lp(g_improved(), 1.5, 7).unwrap()).unwrap();
        assert!((sol.params.ratio - 0.51461).abs() < 1e-4, "{}", sol.params.ratio);
        assert!((sol.params.a[0] - 0.24269440).abs() < 1e-6, "{:?}", sol.params.a);
        assert!(sol.max_violation <= 1e-9);
    }

    #[test]
    fn kappa_endpoints_give_one_half() {
        for kappa in [1.0, 2.0] {
            let sol = solve_lp(&build_lp(G_ORIG, kappa, 7).unwrap()).unwrap();
            assert!((sol.params.ratio - 0.5).abs() < 1e-6, "kappa {kappa}: {}", sol.params.ratio);
        }
    }

    #[test]
    fn kappa_sweep_profile() {
        let kappas: Vec<f64> = (0..=16).map(|l| 1.0 + l as f64 / 16.0).collect();
        let sweep = kappa_sweep(G_ORIG, 7, &kappas).unwrap();
        for &(kappa, ratio) in &sweep {
            if kappa == 1.0 || kappa == 2.0 {
                assert!((ratio - 0.5).abs() < 1e-6);
            } else if kappa == 31.0 / 16.0 {
                assert!((ratio - 0.5026).abs() < 1e-3, "{ratio}");
            } else {
                assert!(ratio > 0.505, "kappa {kappa}: {ratio}");
            }
        }
    }

    #[test]
    fn kappa_below_one_loses_the_randomized_advantage() {
        // a(0) + b(0) <= 1/2 with a(0) >= Gamma and 2 b(0) >= Gamma
        let sol = solve_lp(&build_lp(G_ORIG, 0.0, 7).unwrap()).unwrap();
        assert!((sol.params.ratio - 1.0 / 3.0).abs() < 1e-9);
        let sol = solve_lp(&build_lp(G_ORIG, 0.5, 7).unwrap()).unwrap();
        assert!((sol.params.ratio - 0.4).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_gamma() {
        let ratio = |g: f64| solve_lp(&build_lp(g, 1.5, 7).unwrap()).unwrap().params.ratio;
        let (r0, r1, r2) = (ratio(0.0), ratio(G_ORIG), ratio(g_improved()));
        // truncation at k_max costs a little when gamma = 0
        assert!(r0 <= 0.5 + 1e-9 && r0 > 0.5 - 1e-3, "{r0}");
        assert!(r2 > r1 && r1 > r0);
    }

    #[test]
    fn kmax_saturation() {
        for g in [G_ORIG, g_improved()] {
            let r7 = solve_lp(&build_lp(g, 1.5, 7).unwrap()).unwrap().params.ratio;
            let r8 = solve_lp(&build_lp(g, 1.5, 8).unwrap()).unwrap().params.ratio;
            assert!(r8 - r7 < 1e-3 && r8 >= r7 - 1e-9);
        }
    }

    #[test]
    fn reference_tables_are_feasible() {
        let lp = build_lp(G_ORIG, 1.5, 7).unwrap();
        assert!(lp.max_violation(0.50500053, &TABLE_ORIGINAL_A, &TABLE_ORIGINAL_B) <= 1e-7);
        let lp = build_lp(g_improved(), 1.5, 7).unwrap();
        assert!(lp.max_violation(0.51461, &TABLE_IMPROVED_A, &TABLE_IMPROVED_B) <= 1e-7);
    }

    #[test]
    fn csv_layout() {
        let sol = solve_lp(&build_lp(G_ORIG, 1.5, 2).unwrap()).unwrap();
        let csv = share_table_csv(&sol.params);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("k,a,b\n0,"));
    }
}
