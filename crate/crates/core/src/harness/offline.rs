//! Offline optimum under free disposal.
//!
//! Keeping only the heaviest edge per offline vertex makes the benchmark a
//! maximum-weight bipartite matching between online and offline vertices.

use super::instance::Instance;

/// Maximum total weight of a matching in `w` (rows × cols, entries ≥ 0),
/// by the shortest-augmenting-path Hungarian method on the square padding.
/// Returns the value and, per row, the matched column (if its edge is used).
pub fn max_weight_matching(w: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return (0.0, Vec::new());
    }
    let cost = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            -w[r][c]
        } else {
            0.0
        }
    };
    // 1-indexed potentials; p[j] is the row assigned to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![None; rows];
    let mut value = 0.0;
    for j in 1..=n {
        let (r, c) = (p[j] - 1, j - 1);
        if r < rows && c < cols && w[r][c] > 0.0 {
            assign[r] = Some(c);
            value += w[r][c];
        }
    }
    (value, assign)
}

/// Exhaustive maximum over all injections of the smaller side; for checking.
pub fn brute_force_matching(w: &[Vec<f64>]) -> f64 {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    assert!(n <= 9, "brute force is limited to 9 × 9");
    let at = |r: usize, c: usize| if r < rows && c < cols { w[r][c] } else { 0.0 };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let v: f64 = (0..n).map(|r| at(r, p[r])).sum();
        best = best.max(v);
    });
    best.max(0.0)
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

pub fn offline_opt(instance: &Instance) -> f64 {
    max_weight_matching(&instance.matrix()).0
}
