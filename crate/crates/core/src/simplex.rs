//! Dense two-phase simplex for small equality-constrained linear programs:
//! minimize `c.x` subject to `Ax = b`, `x >= 0`.
//!
//! The coefficient program produces degenerate, rank-deficient systems
//! (stationarity rows with zero right-hand sides, redundant equalities), so
//! pivoting uses Bland's rule throughout and leftover artificial variables
//! are simply banned from re-entering: a redundant row keeps its artificial
//! basic at zero, which is harmless.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Minimized objective coefficients.
    pub objective: Vec<f64>,
    /// Dense constraint rows.
    pub constraints: Vec<Vec<f64>>,
    /// Right-hand sides, one per constraint row.
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 200_000;

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let m = lp.constraints.len();
    let n = lp.objective.len();
    if lp.rhs.len() != m {
        return Err(Error::LengthMismatch {
            left: lp.rhs.len(),
            right: m,
        });
    }
    for row in &lp.constraints {
        if row.len() != n {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: n,
            });
        }
    }

    // Tableau: m rows of [A | I_artificial | b], with b >= 0.
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m];
    for (i, row) in lp.constraints.iter().enumerate() {
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            t[i][j] = flip * v;
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = flip * lp.rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut cost = vec![0.0f64; width];
    for j in n..n + m {
        cost[j] = 1.0;
    }
    for i in 0..m {
        for j in 0..width {
            cost[j] -= t[i][j];
        }
    }
    run_pivots(&mut t, &mut cost, &mut basis, width, usize::MAX)?;
    let phase1 = -cost[width - 1];
    if phase1 > FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "phase-1 objective {phase1:.3e} above tolerance"
        )));
    }

    // Artificials still basic (at zero) would be free to drift positive in
    // phase 2 and absorb constraint slack. Pivot each out on any original
    // column; a row with none is redundant and is dropped.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            match (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                Some(j) => {
                    let scale = t[i][j];
                    for v in t[i].iter_mut() {
                        *v /= scale;
                    }
                    for r in 0..t.len() {
                        if r != i && t[r][j].abs() > 0.0 {
                            let f = t[r][j];
                            for col in 0..width {
                                t[r][col] -= f * t[i][col];
                            }
                            t[r][j] = 0.0;
                        }
                    }
                    basis[i] = j;
                    i += 1;
                }
                None => {
                    t.remove(i);
                    basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    // Phase 2: original objective, artificials barred from entering.
    let mut cost = vec![0.0f64; width];
    cost[..n].copy_from_slice(&lp.objective);
    for i in 0..t.len() {
        let b = basis[i];
        if b < n && cost[b].abs() > 0.0 {
            let scale = cost[b];
            for j in 0..width {
                cost[j] -= scale * t[i][j];
            }
        }
    }
    run_pivots(&mut t, &mut cost, &mut basis, width, n)?;

    let mut x = vec![0.0f64; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[i][width - 1];
        }
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(&c, &v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

/// Bland-rule pivoting until no entering column remains. Columns with index
/// `>= enter_limit` may not enter the basis.
fn run_pivots(
    t: &mut [Vec<f64>],
    cost: &mut [f64],
    basis: &mut [usize],
    width: usize,
    enter_limit: usize,
) -> Result<()> {
    let m = t.len();
    let cols = width - 1;
    for _ in 0..MAX_PIVOTS {
        // Smallest-index column with a negative reduced cost.
        let mut entering = None;
        for (j, &c) in cost.iter().take(cols).enumerate() {
            if j >= enter_limit {
                continue;
            }
            if c < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };

        // Ratio test; ties resolved by the smallest basis variable.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i][e];
            if a > PIVOT_TOL {
                let ratio = t[i][width - 1] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(Error::Infeasible(format!("column {e} unbounded")));
        };

        // Pivot.
        let scale = t[pivot_row][e];
        for v in t[pivot_row].iter_mut() {
            *v /= scale;
        }
        for i in 0..m {
            if i != pivot_row && t[i][e].abs() > 0.0 {
                let f = t[i][e];
                for j in 0..width {
                    t[i][j] -= f * t[pivot_row][j];
                }
                t[i][e] = 0.0;
            }
        }
        if cost[e].abs() > 0.0 {
            let f = cost[e];
            for j in 0..width {
                cost[j] -= f * t[pivot_row][j];
            }
            cost[e] = 0.0;
        }
        basis[pivot_row] = e;
    }
    Err(Error::Internal("simplex pivot budget exhausted".into()))
}
