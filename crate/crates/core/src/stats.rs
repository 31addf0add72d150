//! Rank statistics: Spearman correlation and the Mann-Whitney U test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stochastic::normal_cdf;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spearman {
    pub rho: f64,
    /// One of the series is constant; `rho` is reported as 0.
    pub degenerate: bool,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Argument("spearman needs at least 3 observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("non-finite value in series".into()));
    }
    Ok(match pearson(&average_ranks(x), &average_ranks(y)) {
        Some(rho) => Spearman { rho, degenerate: false },
        None => Spearman { rho: 0.0, degenerate: true },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MwuResult {
    /// Pairs (a_i, b_j) with a_i > b_j, ties counting one half.
    pub u: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub exact: bool,
}

/// Both samples below this size use the exact null distribution.
pub const EXACT_LIMIT: usize = 8;

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MwuResult> {
    if a.len() < EXACT_LIMIT && b.len() < EXACT_LIMIT {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_normal(a, b)
    }
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("both samples need at least one observation".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Argument("non-finite value in sample".into()));
    }
    Ok(())
}

/// Twice the midranks of the pooled sample `a ++ b`, as integers.
fn doubled_ranks(a: &[f64], b: &[f64]) -> Vec<i64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    average_ranks(&pooled).into_iter().map(|r| (2.0 * r).round() as i64).collect()
}

fn u_from_doubled_rank_sum(s2: i64, n1: usize) -> f64 {
    (s2 - (n1 * (n1 + 1)) as i64) as f64 / 2.0
}

/// Exact two-sided test: the null distribution of the rank sum of `a` over
/// all equally likely splits of the pooled midranks.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<MwuResult> {
    check_samples(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let ranks = doubled_ranks(a, b);
    let observed: i64 = ranks[..n1].iter().sum();
    let max_sum: i64 = ranks.iter().sum();
    let width = max_sum as usize + 1;

    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; width]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for k in (1..=n1).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            for s in (r..width).rev() {
                hi[0][s] += lo[k - 1][s - r];
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    // compare |2U - n1 n2| in doubled units
    let centre = (n1 * n2) as i64;
    let deviation = |s2: i64| ((s2 - (n1 * (n1 + 1)) as i64) - centre).abs();
    let obs_dev = deviation(observed);
    let extreme: f64 = ways[n1]
        .iter()
        .enumerate()
        .filter(|&(s, &w)| w > 0.0 && deviation(s as i64) >= obs_dev)
        .map(|(_, &w)| w)
        .sum();
    Ok(MwuResult {
        u: u_from_doubled_rank_sum(observed, n1),
        p_value: (extreme / total).min(1.0),
        n1,
        n2,
        exact: true,
    })
}

/// Normal approximation with tie correction and continuity correction.
pub fn mann_whitney_u_normal(a: &[f64], b: &[f64]) -> Result<MwuResult> {
    check_samples(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let ranks = doubled_ranks(a, b);
    let u = u_from_doubled_rank_sum(ranks[..n1].iter().sum(), n1);

    let n = (n1 + n2) as f64;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1] == pooled[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)).max(1.0));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * (1.0 - normal_cdf(z))).min(1.0)
    };
    Ok(MwuResult { u, p_value, n1, n2, exact: false })
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-schedule columns of one instance.
#[derive(Debug, Clone, Default)]
pub struct InstanceColumns {
    pub instance: String,
    /// Robustness measure columns; `None` where a measure was not available.
    pub rm: Vec<(String, Vec<Option<f64>>)>,
    pub sim: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub instance: String,
    pub rm: String,
    pub sim_measure: String,
    pub rho: f64,
    pub abs: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSummary {
    pub rm: String,
    pub sim_measure: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Mean |ρ| above [`STRONG_CORRELATION`].
    pub strong: bool,
}

pub const STRONG_CORRELATION: f64 = 0.9;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    pub summaries: Vec<BoxSummary>,
}

impl CorrelationTable {
    pub fn summary(&self, rm: &str, sim_measure: &str) -> Option<&BoxSummary> {
        self.summaries.iter().find(|s| s.rm == rm && s.sim_measure == sim_measure)
    }
}

/// Spearman ρ per instance for every (robustness measure, simulation
/// measure) pair, and the spread of |ρ| across instances. Degenerate pairs
/// are kept in `rows` but left out of the summaries.
pub fn correlation_study(instances: &[InstanceColumns]) -> Result<CorrelationTable> {
    let mut rows = Vec::new();
    for inst in instances {
        for (rm, values) in &inst.rm {
            for (sim, target) in &inst.sim {
                if values.len() != target.len() {
                    return Err(Error::Argument(format!("instance {}: column lengths differ", inst.instance)));
                }
                let (x, y): (Vec<f64>, Vec<f64>) =
                    values.iter().zip(target).filter_map(|(v, t)| v.map(|v| (v, *t))).unzip();
                let s = if x.len() < 3 { Spearman { rho: 0.0, degenerate: true } } else { spearman(&x, &y)? };
                rows.push(CorrelationRow {
                    instance: inst.instance.clone(),
                    rm: rm.clone(),
                    sim_measure: sim.clone(),
                    rho: s.rho,
                    abs: s.rho.abs(),
                    degenerate: s.degenerate,
                });
            }
        }
    }

    // summaries in first-seen (rm, sim) order
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &rows {
        if !keys.iter().any(|(a, b)| *a == r.rm && *b == r.sim_measure) {
            keys.push((r.rm.clone(), r.sim_measure.clone()));
        }
    }
    let summaries = keys
        .into_iter()
        .map(|(rm, sim)| {
            let mut v: Vec<f64> = rows
                .iter()
                .filter(|r| r.rm == rm && r.sim_measure == sim && !r.degenerate)
                .map(|r| r.abs)
                .collect();
            v.sort_by(f64::total_cmp);
            let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            BoxSummary {
                count: v.len(),
                min: quantile_sorted(&v, 0.0),
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                q3: quantile_sorted(&v, 0.75),
                max: quantile_sorted(&v, 1.0),
                strong: mean > STRONG_CORRELATION,
                mean,
                rm,
                sim_measure: sim,
            }
        })
        .collect();
    Ok(CorrelationTable { rows, summaries })
}
