//! Small dense two-phase simplex with Bland's rule.
//!
//! Sized for programs with tens of rows and columns. After the tableau phase
//! terminates the basic solution is recomputed from the original constraint
//! matrix with partially pivoted Gaussian elimination, so the returned point
//! does not carry the round-off accumulated by the tableau updates.

use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `maximize objective·x` subject to `rows`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest row or sign violation of `x`.
    pub max_violation: f64,
    /// Smallest phase-2 reduced profit sign check: all reduced profits are
    /// at most this value (≤ 0 certifies optimality).
    pub max_reduced_profit: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let signs = x.iter().map(|&v| (-v).max(0.0));
        rows.chain(signs).fold(0.0, f64::max)
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::new(self).run(self)
    }
}

struct Tableau {
    m: usize,
    /// structural + slack/surplus + artificial columns
    n_total: usize,
    n_struct: usize,
    first_artificial: usize,
    /// m rows of n_total coefficients followed by the rhs
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// column of the original program (after rhs normalisation) for polishing
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n_struct = lp.n_vars();
        let n_slack = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let n_art = lp
            .rows
            .iter()
            .filter(|r| {
                let flipped = r.rhs < 0.0;
                match r.sense {
                    Sense::Eq => true,
                    Sense::Le => flipped,
                    Sense::Ge => !flipped,
                }
            })
            .count();
        let first_artificial = n_struct + n_slack;
        let n_total = first_artificial + n_art;

        let mut t = vec![vec![0.0; n_total + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut rhs = vec![0.0; m];
        let (mut slack, mut art) = (n_struct, first_artificial);
        for (i, row) in lp.rows.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for (j, &a) in row.coeffs.iter().enumerate() {
                t[i][j] = sign * a;
            }
            t[i][n_total] = sign * row.rhs;
            rhs[i] = sign * row.rhs;
            let sense = match (row.sense, sign < 0.0) {
                (Sense::Le, true) => Sense::Ge,
                (Sense::Ge, true) => Sense::Le,
                (s, _) => s,
            };
            match sense {
                Sense::Le => {
                    t[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        let cols = (0..first_artificial)
            .map(|j| (0..m).map(|i| t[i][j]).collect())
            .collect();
        Self {
            m,
            n_total,
            n_struct,
            first_artificial,
            t,
            basis,
            cols,
            rhs,
            pivots: 0,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Reduced profits `c_j - c_B B^{-1} a_j` for the allowed columns.
    fn reduced_profits(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        (0..allowed)
            .map(|j| {
                let cb: f64 = (0..self.m).map(|i| cost[self.basis[i]] * self.t[i][j]).sum();
                cost[j] - cb
            })
            .collect()
    }

    /// Maximises `cost` over columns `< allowed`. Returns false if unbounded.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> bool {
        loop {
            let profits = self.reduced_profits(cost, allowed);
            // Bland: lowest-index improving column
            let Some(enter) = (0..allowed).find(|&j| profits[j] > PIVOT_EPS && !self.basis.contains(&j))
            else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i][enter];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][self.n_total] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || ((ratio - lr).abs() <= 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((row, _)) => self.pivot(row, enter),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let n = self.n_struct;
        // phase 1: maximise minus the sum of artificials
        if self.first_artificial < self.n_total {
            let mut cost = vec![0.0; self.n_total];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            self.optimise(&cost, self.n_total);
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.t[i][self.n_total])
                .sum();
            if infeas > FEAS_EPS {
                return self.outcome(lp, LpStatus::Infeasible, vec![0.0; n], f64::NAN);
            }
            // drive zero-level artificials out of the basis
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(j) =
                        (0..self.first_artificial).find(|&j| self.t[i][j].abs() > PIVOT_EPS)
                    {
                        self.pivot(i, j);
                    }
                }
            }
        }

        let mut cost = vec![0.0; self.n_total];
        cost[..n].copy_from_slice(&lp.objective);
        if !self.optimise(&cost, self.first_artificial) {
            return self.outcome(lp, LpStatus::Unbounded, vec![0.0; n], f64::NAN);
        }
        let profits = self.reduced_profits(&cost, self.first_artificial);
        let max_profit = profits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let x = self.polished_solution();
        self.outcome(lp, LpStatus::Optimal, x, max_profit)
    }

    /// Re-solves `B x_B = b` on the original columns.
    fn polished_solution(&self) -> Vec<f64> {
        let rows: Vec<usize> = (0..self.m)
            .filter(|&i| self.basis[i] < self.first_artificial)
            .collect();
        let tableau_x = |j: usize| -> f64 {
            (0..self.m)
                .find(|&i| self.basis[i] == j)
                .map_or(0.0, |i| self.t[i][self.n_total])
        };
        let fallback = || (0..self.n_struct).map(tableau_x).collect::<Vec<_>>();
        if rows.len() != self.m {
            // redundant rows kept an artificial basic at zero
            return fallback();
        }
        let k = self.m;
        let mut a: Vec<Vec<f64>> = (0..k)
            .map(|r| {
                let mut line: Vec<f64> = self.basis.iter().map(|&b| self.cols[b][r]).collect();
                line.push(self.rhs[r]);
                line
            })
            .collect();
        for c in 0..k {
            let p = (c..k)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .unwrap();
            if a[p][c].abs() < 1e-14 {
                return fallback();
            }
            a.swap(c, p);
            for r in 0..k {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    if f != 0.0 {
                        for q in c..=k {
                            a[r][q] -= f * a[c][q];
                        }
                    }
                }
            }
        }
        let mut x = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = a[i][k] / a[i][i];
            }
        }
        x
    }

    fn outcome(&self, lp: &LinearProgram, status: LpStatus, x: Vec<f64>, profit: f64) -> LpOutcome {
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome {
            status,
            max_violation: lp.max_violation(&x),
            objective,
            x,
            max_reduced_profit: profit,
            pivots: self.pivots,
        }
    }
}
