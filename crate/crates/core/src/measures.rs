//! Surrogate robustness measures RM1-RM18 and the planned makespan.
//!
//! Slack-based measures read a [`SlackProfile`]; RM15/RM16 propagate
//! Gaussian moments through the combined order; RM13/RM14 are interval
//! linear programs solved in [`crate::lp`].

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;
use crate::model::{Schedule, TIME_EPS};
use crate::order::CombinedOrder;
use crate::slack::SlackProfile;
use crate::stochastic::{DistKind, DistributionSpec, GaussianMoment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Rm1,
    Rm2,
    Rm3,
    Rm4,
    Rm5,
    Rm6,
    Rm7,
    Rm8,
    Rm9,
    Rm10,
    Rm11,
    Rm12,
    Rm13,
    Rm14,
    Rm15,
    Rm16,
    Rm17,
    Rm18,
    Cmax,
}

impl Measure {
    /// Column order used everywhere: RM1..RM18, then Cmax.
    pub const ALL: [Measure; 19] = [
        Measure::Rm1,
        Measure::Rm2,
        Measure::Rm3,
        Measure::Rm4,
        Measure::Rm5,
        Measure::Rm6,
        Measure::Rm7,
        Measure::Rm8,
        Measure::Rm9,
        Measure::Rm10,
        Measure::Rm11,
        Measure::Rm12,
        Measure::Rm13,
        Measure::Rm14,
        Measure::Rm15,
        Measure::Rm16,
        Measure::Rm17,
        Measure::Rm18,
        Measure::Cmax,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 19] = [
            "RM1", "RM2", "RM3", "RM4", "RM5", "RM6", "RM7", "RM8", "RM9", "RM10", "RM11", "RM12", "RM13", "RM14",
            "RM15", "RM16", "RM17", "RM18", "Cmax",
        ];
        NAMES[self.index()]
    }

    /// RM12, RM18 and Cmax are lower-is-more-robust; all others higher.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Measure::Rm12 | Measure::Rm18 | Measure::Cmax)
    }

    pub fn needs_lp(self) -> bool {
        matches!(self, Measure::Rm13 | Measure::Rm14)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Measure::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Argument(format!("unknown measure '{s}'")))
    }
}

/// Parses a comma-separated measure list; `all` selects every measure.
pub fn parse_measure_list(s: &str) -> Result<Vec<Measure>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Measure::ALL.to_vec());
    }
    let mut out: Vec<Measure> = s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// How the per-job overrun factor λ is derived from a duration law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Relative overrun at the given quantile level.
    Quantile(f64),
    /// Mean absolute deviation relative to the mean.
    MeanAbsDeviation,
}

impl LambdaRule {
    pub fn factor(self, dist: &DistributionSpec) -> Result<f64> {
        match self {
            LambdaRule::Quantile(q) => dist.lambda_factor(q),
            LambdaRule::MeanAbsDeviation => Ok(dist.mad_factor()),
        }
    }
}

/// Per-job λ factors. Both rules are relative to the mean, so the factor
/// is computed once per (kind, cv) on a unit-mean law.
pub fn lambdas(dists: &[DistributionSpec], rule: LambdaRule) -> Result<Vec<f64>> {
    let mut seen: Vec<(DistKind, u64, f64)> = Vec::new();
    dists
        .iter()
        .map(|d| {
            if let Some(&(_, _, f)) = seen.iter().find(|(k, cv, _)| *k == d.kind && *cv == d.cv.to_bits()) {
                return Ok(f);
            }
            let f = rule.factor(&DistributionSpec { mean: 1.0, ..*d })?;
            seen.push((d.kind, d.cv.to_bits(), f));
            Ok(f)
        })
        .collect()
}

/// Which predecessors feed the estimated starting delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsdScope {
    #[default]
    AllPredecessors,
    DirectPredecessors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub enabled: Vec<Measure>,
    /// λ for RM11, RM12, RM17 and RM18.
    pub threshold_lambda: LambdaRule,
    /// λ for RM5.
    pub rm5_lambda: LambdaRule,
    pub esd_scope: EsdScope,
    pub timing: bool,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            enabled: Measure::ALL.to_vec(),
            threshold_lambda: LambdaRule::Quantile(0.7),
            rm5_lambda: LambdaRule::MeanAbsDeviation,
            esd_scope: EsdScope::AllPredecessors,
            timing: false,
        }
    }
}

impl MeasureConfig {
    pub fn with_measures(measures: &[Measure]) -> Self {
        MeasureConfig { enabled: measures.to_vec(), ..Default::default() }
    }
}

/// Measure values for one schedule. Missing entries are disabled or failed
/// measures; failures are listed in `errors`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    values: [Option<f64>; 19],
    pub errors: Vec<(Measure, String)>,
    pub timings: Vec<(Measure, Duration)>,
}

impl Default for MeasureVector {
    fn default() -> Self {
        MeasureVector { values: [None; 19], errors: Vec::new(), timings: Vec::new() }
    }
}

impl MeasureVector {
    pub fn get(&self, m: Measure) -> Option<f64> {
        self.values[m.index()]
    }

    pub fn set(&mut self, m: Measure, v: f64) {
        self.values[m.index()] = Some(v);
    }

    /// Values in [`Measure::ALL`] order.
    pub fn values(&self) -> &[Option<f64>; 19] {
        &self.values
    }
}

pub fn cmax(schedule: &Schedule) -> f64 {
    schedule.planned_makespan()
}

pub fn rm1(profile: &SlackProfile) -> f64 {
    profile.ts.iter().sum()
}

pub fn rm2(profile: &SlackProfile) -> f64 {
    profile.fs.iter().sum()
}

pub fn rm3(profile: &SlackProfile) -> f64 {
    profile.ts.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn rm4(profile: &SlackProfile, p: &[f64]) -> f64 {
    profile.fs.iter().zip(p).map(|(f, p)| f / p).fold(f64::INFINITY, f64::min)
}

/// `Σ min(fs_j, λ_j p_j)`.
pub fn rm5(profile: &SlackProfile, p: &[f64], lambda: &[f64]) -> f64 {
    profile.fs.iter().zip(p).zip(lambda).map(|((f, p), l)| f.min(l * p)).sum()
}

/// Number of jobs with positive free slack.
pub fn rm6(profile: &SlackProfile) -> f64 {
    profile.fs.iter().filter(|&&f| f > TIME_EPS).count() as f64
}

pub fn rm7(profile: &SlackProfile, p: &[f64]) -> f64 {
    profile.fs.iter().zip(p).map(|(f, p)| f * p).sum()
}

pub fn rm8(profile: &SlackProfile) -> f64 {
    profile.fs.iter().enumerate().map(|(j, f)| f * profile.ndp(j) as f64).sum()
}

pub fn rm9(profile: &SlackProfile) -> f64 {
    profile.fs.iter().enumerate().map(|(j, f)| f * profile.nds(j) as f64).sum()
}

pub fn rm10(profile: &SlackProfile, p: &[f64]) -> f64 {
    profile.fs.iter().enumerate().map(|(j, f)| f * profile.nds(j) as f64 * p[j]).sum()
}

/// RM11 and RM12: for each job j, the jobs i among its predecessors and
/// itself whose expected overrun `λ_i p_i` is covered (RM11) or not
/// covered (RM12) by `fs_j`.
pub fn rm11_rm12(profile: &SlackProfile, p: &[f64], lambda: &[f64]) -> (f64, f64) {
    let overrun: Vec<f64> = p.iter().zip(lambda).map(|(p, l)| p * l).collect();
    let (mut covered, mut uncovered) = (0usize, 0usize);
    for j in 0..profile.n() {
        let budget = profile.fs[j] + TIME_EPS;
        for i in profile.order.predecessors(j).iter().chain(std::iter::once(j)) {
            if overrun[i] <= budget {
                covered += 1;
            } else {
                uncovered += 1;
            }
        }
    }
    (covered as f64, uncovered as f64)
}

/// Sum over jobs of the fraction of direct predecessors whose free slack
/// covers their own expected overrun (1 for jobs without predecessors).
pub fn rm17(profile: &SlackProfile, p: &[f64], lambda: &[f64]) -> f64 {
    (0..profile.n())
        .map(|j| {
            let preds = profile.order.direct_predecessors(j);
            if preds.is_empty() {
                1.0
            } else {
                let ok = preds.iter().filter(|&&i| profile.fs[i] >= lambda[i] * p[i] - TIME_EPS).count();
                ok as f64 / preds.len() as f64
            }
        })
        .sum()
}

/// Estimated starting delays and their sum (RM18).
pub fn rm18(profile: &SlackProfile, p: &[f64], lambda: &[f64], scope: EsdScope) -> (f64, Vec<f64>) {
    let n = profile.n();
    let mut esd = vec![0.0; n];
    // pushed[i]: delay job i passes on to its successors
    let mut pushed = vec![0.0; n];
    // upstream[i]: largest push from i or any of its ancestors
    let mut upstream = vec![0.0f64; n];
    for &j in profile.order.topo() {
        let preds = profile.order.direct_predecessors(j);
        let delay = match scope {
            EsdScope::AllPredecessors => preds.iter().map(|&i| upstream[i]).fold(0.0, f64::max),
            EsdScope::DirectPredecessors => preds.iter().map(|&i| pushed[i]).fold(0.0, f64::max),
        };
        esd[j] = delay;
        let excess = lambda[j] * p[j] + delay - profile.fs[j];
        pushed[j] = if excess > TIME_EPS { excess } else { 0.0 };
        upstream[j] = delay.max(pushed[j]);
    }
    (esd.iter().sum(), esd)
}

/// Gaussian start (X) and completion (Y) moments of every job.
#[derive(Debug, Clone)]
pub struct NormalPropagation {
    pub start: Vec<GaussianMoment>,
    pub completion: Vec<GaussianMoment>,
    /// Moment of the latest direct-predecessor completion, if any.
    pub ready: Vec<Option<GaussianMoment>>,
}

impl NormalPropagation {
    /// Propagates moments in topological order; the pairwise max is folded
    /// over direct predecessors in ascending job id.
    pub fn new(order: &CombinedOrder, start: &[f64], dists: &[DistributionSpec]) -> Self {
        let n = order.n();
        let mut x = vec![GaussianMoment::point(0.0); n];
        let mut y = vec![GaussianMoment::point(0.0); n];
        let mut ready = vec![None; n];
        for &j in order.topo() {
            let preds = order.direct_predecessors(j);
            let r = preds.iter().map(|&i| y[i]).reduce(GaussianMoment::max);
            ready[j] = r;
            let planned = GaussianMoment::point(start[j]);
            x[j] = match r {
                Some(r) => r.max(planned),
                None => planned,
            };
            y[j] = x[j].plus(GaussianMoment::new(dists[j].mean, dists[j].variance()));
        }
        NormalPropagation { start: x, completion: y, ready }
    }

    /// Moment of the makespan: pairwise max over terminal completions in
    /// ascending job id.
    pub fn makespan(&self, order: &CombinedOrder) -> GaussianMoment {
        order
            .terminals()
            .map(|j| self.completion[j])
            .reduce(GaussianMoment::max)
            .unwrap_or(GaussianMoment::point(0.0))
    }
}

/// Approximate probability of finishing by `deadline`.
pub fn rm15(order: &CombinedOrder, start: &[f64], dists: &[DistributionSpec], deadline: f64) -> f64 {
    NormalPropagation::new(order, start, dists).makespan(order).cdf_at(deadline)
}

/// Sum over jobs of the approximate probability of starting on time.
pub fn rm16(order: &CombinedOrder, start: &[f64], dists: &[DistributionSpec]) -> f64 {
    let prop = NormalPropagation::new(order, start, dists);
    prop.ready
        .iter()
        .zip(start)
        .map(|(r, &s)| match r {
            Some(r) => r.cdf_at(s),
            None => 1.0,
        })
        .sum()
}

/// Evaluates one measure from a prepared profile.
fn eval_with_profile(
    m: Measure,
    schedule: &Schedule,
    profile: &SlackProfile,
    dists: &[DistributionSpec],
    config: &MeasureConfig,
) -> Result<f64> {
    let p: Vec<f64> = schedule.instance().jobs.iter().map(|j| j.p).collect();
    let p = p.as_slice();
    let threshold = || lambdas(dists, config.threshold_lambda);
    Ok(match m {
        Measure::Cmax => cmax(schedule),
        Measure::Rm1 => rm1(profile),
        Measure::Rm2 => rm2(profile),
        Measure::Rm3 => rm3(profile),
        Measure::Rm4 => rm4(profile, p),
        Measure::Rm5 => rm5(profile, p, &lambdas(dists, config.rm5_lambda)?),
        Measure::Rm6 => rm6(profile),
        Measure::Rm7 => rm7(profile, p),
        Measure::Rm8 => rm8(profile),
        Measure::Rm9 => rm9(profile),
        Measure::Rm10 => rm10(profile, p),
        Measure::Rm11 => rm11_rm12(profile, p, &threshold()?).0,
        Measure::Rm12 => rm11_rm12(profile, p, &threshold()?).1,
        Measure::Rm13 => lp::solve_rm13(schedule)?.objective,
        Measure::Rm14 => lp::solve_rm14(schedule, &lp::IntervalWeights::Uniform, None)?.objective,
        Measure::Rm15 => rm15(&profile.order, schedule.start(), dists, schedule.instance().deadline),
        Measure::Rm16 => rm16(&profile.order, schedule.start(), dists),
        Measure::Rm17 => rm17(profile, p, &threshold()?),
        Measure::Rm18 => rm18(profile, p, &threshold()?, config.esd_scope).0,
    })
}

/// Evaluates a single measure from scratch, building only what it needs.
/// Used for per-measure timing.
pub fn evaluate_one(schedule: &Schedule, dists: &[DistributionSpec], m: Measure, config: &MeasureConfig) -> Result<f64> {
    match m {
        Measure::Cmax => Ok(cmax(schedule)),
        Measure::Rm13 => Ok(lp::solve_rm13(schedule)?.objective),
        Measure::Rm14 => Ok(lp::solve_rm14(schedule, &lp::IntervalWeights::Uniform, None)?.objective),
        Measure::Rm15 => {
            let order = schedule.combined_order();
            Ok(rm15(&order, schedule.start(), dists, schedule.instance().deadline))
        }
        Measure::Rm16 => Ok(rm16(&schedule.combined_order(), schedule.start(), dists)),
        _ => eval_with_profile(m, schedule, &SlackProfile::new(schedule), dists, config),
    }
}

/// Every enabled measure for a feasible schedule, using the duration laws
/// attached to the instance.
pub fn evaluate_all(schedule: &Schedule, config: &MeasureConfig) -> Result<MeasureVector> {
    evaluate_all_with(schedule, &schedule.instance().dists(), config)
}

/// Every enabled measure under the given duration laws. The slack profile
/// is computed once; an LP failure is recorded for that measure only.
pub fn evaluate_all_with(schedule: &Schedule, dists: &[DistributionSpec], config: &MeasureConfig) -> Result<MeasureVector> {
    if let Some(v) = schedule.validate().first() {
        return Err(Error::Infeasible(v.to_string()));
    }
    if dists.len() != schedule.n() {
        return Err(Error::Argument(format!("expected {} distributions, got {}", schedule.n(), dists.len())));
    }
    let started = Instant::now();
    let profile = SlackProfile::new(schedule);
    let profile_time = started.elapsed();

    let mut out = MeasureVector::default();
    for &m in &config.enabled {
        let t0 = Instant::now();
        match eval_with_profile(m, schedule, &profile, dists, config) {
            Ok(v) => out.set(m, v),
            Err(e @ Error::Argument(_)) => return Err(e),
            Err(e) => out.errors.push((m, e.to_string())),
        }
        if config.timing {
            out.timings.push((m, t0.elapsed() + if m == Measure::Cmax { Duration::ZERO } else { profile_time }));
        }
    }
    Ok(out)
}
