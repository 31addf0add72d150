//! Interval linear programs over a schedule.
//!
//! Every job j gets a window `[e_j, l_j]` of admissible start times such
//! that `s_j <= e_j <= l_j`, `l_j + p_j <= e_i` for each direct arc j -> i
//! of the combined order, and `l_j + p_j <= d_j`.
//!
//! * RM13 maximises the total window width, solved with the dense simplex
//!   in [`simplex`].
//! * RM14 maximises the minimum weighted width `min_j w_j (l_j - e_j)`. For
//!   a candidate value B every window is at least `B / w_j` wide, and the
//!   system is feasible iff no path of the combined order is too long:
//!   `s_head + Σ_path (p_i + B / w_i) <= d_tail`. The optimum is therefore
//!   the minimum over paths of a ratio, found exactly by Newton's method on
//!   the longest-path function (each step jumps to the ratio of the current
//!   critical path, never overshooting the optimum).

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Deadlines, Schedule, TIME_EPS};
use crate::order::CombinedOrder;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSolution {
    pub e: Vec<f64>,
    pub l: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub job: usize,
    pub e: f64,
    pub l: f64,
}

impl IntervalSolution {
    pub fn width(&self, j: usize) -> f64 {
        self.l[j] - self.e[j]
    }

    pub fn rows(&self) -> Vec<IntervalRow> {
        self.e.iter().zip(&self.l).enumerate().map(|(job, (&e, &l))| IntervalRow { job, e, l }).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "objective": self.objective, "intervals": self.rows() })
    }
}

/// Weighting of window widths in the max-min objective.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalWeights {
    /// Unweighted RM14.
    Uniform,
    /// Explicit positive weights `w_j`.
    Weights(Vec<f64>),
    /// `w_j = 1 / σ_j`; jobs with `σ_j = 0` are left out of the minimum.
    InverseStdDev(Vec<f64>),
}

impl IntervalWeights {
    /// Width per unit of objective, `1 / w_j` (zero for excluded jobs).
    fn width_coefficients(&self, n: usize) -> Result<Vec<f64>> {
        let coef = match self {
            IntervalWeights::Uniform => vec![1.0; n],
            IntervalWeights::Weights(w) => {
                if let Some(bad) = w.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
                    return Err(Error::Argument(format!("interval weights must be positive, got {bad}")));
                }
                w.iter().map(|w| 1.0 / w).collect()
            }
            IntervalWeights::InverseStdDev(sigma) => {
                if let Some(bad) = sigma.iter().find(|&&s| !(s >= 0.0) || !s.is_finite()) {
                    return Err(Error::Argument(format!("standard deviations must be non-negative, got {bad}")));
                }
                if sigma.iter().all(|&s| s == 0.0) {
                    return Err(Error::Argument("every standard deviation is zero".into()));
                }
                sigma.clone()
            }
        };
        if coef.len() != n {
            return Err(Error::Argument(format!("expected {n} weights, got {}", coef.len())));
        }
        Ok(coef)
    }
}

fn deadlines_for(schedule: &Schedule, deadlines: Option<&Deadlines>) -> Deadlines {
    deadlines.cloned().unwrap_or(Deadlines::Global(schedule.instance().deadline))
}

/// Longest-path state at a given B: earliest window starts and, for the
/// path realising each, its accumulated fixed length and width coefficient.
struct PathState {
    e: Vec<f64>,
    fixed: Vec<f64>,
    coef: Vec<f64>,
}

fn earliest_windows(order: &CombinedOrder, start: &[f64], p: &[f64], c: &[f64], b: f64) -> PathState {
    let n = order.n();
    let mut e = start.to_vec();
    let mut fixed = start.to_vec();
    let mut coef = vec![0.0; n];
    for &j in order.topo() {
        for &i in order.direct_predecessors(j) {
            let cand_fixed = fixed[i] + p[i];
            let cand_coef = coef[i] + c[i];
            let cand = cand_fixed + cand_coef * b;
            // prefer the steeper path on ties
            if cand > e[j] + 1e-12 || (cand >= e[j] - 1e-12 && cand_coef > coef[j]) {
                e[j] = cand.max(e[j]);
                fixed[j] = cand_fixed;
                coef[j] = cand_coef;
            }
        }
    }
    PathState { e, fixed, coef }
}

/// Solves the weighted max-min window LP; per-job deadlines default to the
/// instance's global deadline.
///
/// Among optimal layouts the one with componentwise smallest `e` is
/// returned (hence lexicographically smallest in any order), and every `l_j`
/// is as large as that `e` allows.
pub fn solve_rm14(schedule: &Schedule, weights: &IntervalWeights, deadlines: Option<&Deadlines>) -> Result<IntervalSolution> {
    let n = schedule.n();
    let order = schedule.combined_order();
    let p = schedule.instance().durations();
    let start = schedule.start();
    let c = weights.width_coefficients(n)?;
    let d = deadlines_for(schedule, deadlines);

    // worst excess of a completion over its deadline along critical paths
    let violation = |state: &PathState, b: f64| -> (f64, usize) {
        (0..n)
            .map(|j| (state.e[j] + c[j] * b + p[j] - d.of(j), j))
            .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };

    let at_zero = earliest_windows(&order, start, &p, &c, 0.0);
    let (excess, job) = violation(&at_zero, 0.0);
    if excess > TIME_EPS {
        return Err(Error::Infeasible(format!("job {job} cannot complete by its deadline (excess {excess})")));
    }

    let mut b = (0..n)
        .filter(|&j| c[j] > 0.0)
        .map(|j| (d.of(j) - start[j] - p[j]) / c[j])
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let mut state = earliest_windows(&order, start, &p, &c, b);
    for _ in 0..10 * n + 100 {
        let (excess, j) = violation(&state, b);
        if excess <= 1e-12 * d.of(j).abs().max(1.0) {
            break;
        }
        let slope = state.coef[j] + c[j];
        if slope <= 0.0 {
            // constant path already violates: cannot happen once B = 0 passed
            return Err(Error::Infeasible(format!("job {j} cannot complete by its deadline")));
        }
        let next = ((d.of(j) - state.fixed[j] - p[j]) / slope).max(0.0);
        if next >= b {
            break;
        }
        b = next;
        state = earliest_windows(&order, start, &p, &c, b);
    }

    let e = state.e;
    let l = latest_window_ends(&order, &e, &p, &d);
    Ok(IntervalSolution { e, l, objective: b })
}

/// `l_j = min(d_j - p_j, min over direct successors i of e_i - p_j)`.
fn latest_window_ends(order: &CombinedOrder, e: &[f64], p: &[f64], d: &Deadlines) -> Vec<f64> {
    (0..order.n())
        .map(|j| {
            order
                .direct_successors(j)
                .iter()
                .map(|&i| e[i] - p[j])
                .fold(d.of(j) - p[j], f64::min)
                .max(e[j])
        })
        .collect()
}

/// Maximises the total window width.
pub fn solve_rm13(schedule: &Schedule) -> Result<IntervalSolution> {
    solve_rm13_with(schedule, None)
}

pub fn solve_rm13_with(schedule: &Schedule, deadlines: Option<&Deadlines>) -> Result<IntervalSolution> {
    let n = schedule.n();
    let order = schedule.combined_order();
    let p = schedule.instance().durations();
    let s = schedule.start();
    let d = deadlines_for(schedule, deadlines);

    // variables: x_j = e_j - s_j (0..n), w_j = l_j - e_j (n..2n)
    let arcs = order.direct_arcs();
    let mut a = Vec::with_capacity(arcs.len() + n);
    let mut b = Vec::with_capacity(arcs.len() + n);
    let mut push = |row: Vec<f64>, rhs: f64, what: String| -> Result<()> {
        if rhs < -TIME_EPS {
            return Err(Error::Infeasible(what));
        }
        a.push(row);
        b.push(rhs.max(0.0));
        Ok(())
    };
    for &(j, i) in &arcs {
        let mut row = vec![0.0; 2 * n];
        row[j] = 1.0;
        row[n + j] = 1.0;
        row[i] -= 1.0;
        push(row, s[i] - s[j] - p[j], format!("job {i} starts before predecessor {j} completes"))?;
    }
    for j in 0..n {
        let mut row = vec![0.0; 2 * n];
        row[j] = 1.0;
        row[n + j] = 1.0;
        push(row, d.of(j) - s[j] - p[j], format!("job {j} completes after its deadline"))?;
    }
    let mut c = vec![0.0; 2 * n];
    c[n..].fill(1.0);
    let sol = simplex::maximize(&c, &a, &b)?;
    let e: Vec<f64> = (0..n).map(|j| s[j] + sol.x[j]).collect();
    let l: Vec<f64> = (0..n).map(|j| e[j] + sol.x[n + j]).collect();
    Ok(IntervalSolution { e, l, objective: sol.objective })
}

/// Moves every job to the start of its window, `s_j := e_j`.
pub fn apply_buffers(schedule: &Schedule, sol: &IntervalSolution) -> Result<Schedule> {
    schedule.with_starts(sol.e.clone())
}
