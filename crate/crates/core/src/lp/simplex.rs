//! Dense tableau simplex for `max c·x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The origin is feasible, so no phase one is needed. Pivoting follows
//! Bland's rule, which rules out cycling on degenerate vertices.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Solves the LP. `a` is row-major with `b.len()` rows of `c.len()` columns.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = b.len();
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Argument("constraint matrix shape mismatch".into()));
    }
    if let Some(&bad) = b.iter().find(|&&v| v < 0.0) {
        return Err(Error::Argument(format!("right-hand side must be non-negative, got {bad}")));
    }

    // columns: n structural, m slack, then rhs
    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; (m + 1) * width];
    for (r, row) in a.iter().enumerate() {
        t[r * width..r * width + n].copy_from_slice(row);
        t[r * width + n + r] = 1.0;
        t[r * width + rhs] = b[r];
    }
    // objective row holds reduced costs c_j - z_j
    let obj = m * width;
    t[obj..obj + n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0usize;
    let max_pivots = 50 * (n + m) + 1000;
    loop {
        let Some(enter) = (0..n + m).find(|&j| t[obj + j] > PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = t[r * width + enter];
            if coef > PIVOT_EPS {
                let ratio = t[r * width + rhs] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Argument("linear program is unbounded".into()));
        };
        pivot(&mut t, width, m, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Argument("simplex pivot limit exceeded".into()));
        }
    }

    let mut x = vec![0.0; n];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[r * width + rhs].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution { x, objective, pivots })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for r in 0..=m {
        if r == row {
            continue;
        }
        let f = t[r * width + col];
        if f == 0.0 {
            continue;
        }
        for (v, pv) in t[r * width..(r + 1) * width].iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        t[r * width + col] = 0.0;
    }
}
