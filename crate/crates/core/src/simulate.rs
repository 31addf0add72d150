//! Monte-Carlo execution of a schedule.
//!
//! Jobs never start before their planned start: in each replication
//! `X_j = max(s_j, max over direct predecessors Y_i)` and `Y_j = X_j + D_j`.
//! The duration of job j in replication k is drawn from its own stream keyed
//! by `(seed, k, key_j)`, where `key_j` defaults to the job id. Passing
//! stable keys makes a report independent of how jobs are numbered.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Schedule, TIME_EPS};
use crate::order::CombinedOrder;
use crate::rng::job_stream;
use crate::stochastic::DistributionSpec;

/// Realized starts and completions of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Realization {
    pub fn makespan(&self) -> f64 {
        self.y.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_delay(&self, start: &[f64]) -> f64 {
        pairwise_sum(&self.x.iter().zip(start).map(|(x, s)| x - s).collect::<Vec<_>>())
    }

    pub fn on_time_count(&self, start: &[f64]) -> usize {
        self.x.iter().zip(start).filter(|(x, s)| **x <= **s + TIME_EPS).count()
    }
}

/// Forward pass for given realized durations.
pub fn realize(order: &CombinedOrder, start: &[f64], durations: &[f64]) -> Realization {
    let n = order.n();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for &j in order.topo() {
        let ready = order.direct_predecessors(j).iter().map(|&i| y[i]).fold(start[j], f64::max);
        x[j] = ready;
        y[j] = ready + durations[j];
    }
    Realization { x, y }
}

/// Durations of replication `rep`, job j drawn from stream `(seed, rep, keys[j])`.
pub fn sample_durations(dists: &[DistributionSpec], seed: u64, rep: u64, keys: &[u64]) -> Vec<f64> {
    dists
        .iter()
        .zip(keys)
        .map(|(d, &k)| d.sample(&mut job_stream(seed, rep, k)))
        .collect()
}

/// One replication of `schedule`.
pub fn run_once(schedule: &Schedule, dists: &[DistributionSpec], seed: u64, rep: u64) -> Realization {
    let keys: Vec<u64> = (0..schedule.n() as u64).collect();
    realize(&schedule.combined_order(), schedule.start(), &sample_durations(dists, seed, rep, &keys))
}

/// Individual deadlines for a designated subset of jobs.
#[derive(Debug, Clone, PartialEq)]
pub struct JobDeadlines {
    pub jobs: Vec<usize>,
    pub deadlines: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub replications: usize,
    pub seed: u64,
    /// Per-job stream keys; job ids when `None`.
    pub stream_keys: Option<Vec<u64>>,
    pub job_deadlines: Option<JobDeadlines>,
}

impl SimulationOptions {
    pub fn new(replications: usize, seed: u64) -> Self {
        SimulationOptions { replications, seed, stream_keys: None, job_deadlines: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeadlineStats {
    /// Mean over runs of `Σ max(0, Y_j - d_j)` over the designated jobs.
    pub total_deadline_delay: f64,
    /// Mean over runs of the number of designated jobs finishing late.
    pub late_jobs: f64,
    /// Fraction of runs with at least one late designated job.
    pub frac_runs_late: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationReport {
    pub replications: usize,
    pub seed: u64,
    pub avg_makespan: f64,
    pub frac_within_deadline: f64,
    pub frac_on_time: f64,
    pub total_delay: f64,
    pub deadline_stats: Option<DeadlineStats>,
}

/// Names of the four standard simulation measures, in CSV order.
pub const SIM_MEASURES: [&str; 4] = ["avg_makespan", "frac_within_deadline", "frac_on_time", "total_delay"];

impl SimulationReport {
    pub fn measure(&self, name: &str) -> Option<f64> {
        match name {
            "avg_makespan" => Some(self.avg_makespan),
            "frac_within_deadline" => Some(self.frac_within_deadline),
            "frac_on_time" => Some(self.frac_on_time),
            "total_delay" => Some(self.total_delay),
            "total_deadline_delay" => self.deadline_stats.map(|d| d.total_deadline_delay),
            "late_jobs" => self.deadline_stats.map(|d| d.late_jobs),
            "frac_runs_late" => self.deadline_stats.map(|d| d.frac_runs_late),
            _ => None,
        }
    }
}

pub fn simulate(schedule: &Schedule, dists: &[DistributionSpec], opts: &SimulationOptions) -> Result<SimulationReport> {
    let n = schedule.n();
    if opts.replications == 0 {
        return Err(Error::Argument("replication count must be at least 1".into()));
    }
    if dists.len() != n {
        return Err(Error::Argument(format!("expected {n} duration laws, got {}", dists.len())));
    }
    let keys: Vec<u64> = match &opts.stream_keys {
        Some(k) if k.len() == n => k.clone(),
        Some(k) => return Err(Error::Argument(format!("expected {n} stream keys, got {}", k.len()))),
        None => (0..n as u64).collect(),
    };
    if let Some(jd) = &opts.job_deadlines {
        if jd.jobs.len() != jd.deadlines.len() || jd.jobs.iter().any(|&j| j >= n) {
            return Err(Error::Argument("malformed per-job deadlines".into()));
        }
    }

    let order = schedule.combined_order();
    let start = schedule.start();
    let deadline = schedule.instance().deadline;
    let reps = opts.replications;
    let mut makespan = Vec::with_capacity(reps);
    let mut within = Vec::with_capacity(reps);
    let mut on_time = Vec::with_capacity(reps);
    let mut delay = Vec::with_capacity(reps);
    let mut dl_delay = Vec::new();
    let mut dl_late = Vec::new();
    let mut dl_any = Vec::new();
    for rep in 0..reps {
        let durations = sample_durations(dists, opts.seed, rep as u64, &keys);
        let real = realize(&order, start, &durations);
        let cmax = real.makespan();
        makespan.push(cmax);
        within.push(if cmax <= deadline + TIME_EPS { 1.0 } else { 0.0 });
        on_time.push(real.on_time_count(start) as f64 / n as f64);
        delay.push(real.total_delay(start));
        if let Some(jd) = &opts.job_deadlines {
            let mut late = 0usize;
            let mut excess = 0.0;
            for (&j, &d) in jd.jobs.iter().zip(&jd.deadlines) {
                if real.y[j] > d + TIME_EPS {
                    late += 1;
                    excess += real.y[j] - d;
                }
            }
            dl_delay.push(excess);
            dl_late.push(late as f64);
            dl_any.push(if late > 0 { 1.0 } else { 0.0 });
        }
    }
    let mean = |v: &[f64]| pairwise_sum(v) / v.len() as f64;
    Ok(SimulationReport {
        replications: reps,
        seed: opts.seed,
        avg_makespan: mean(&makespan),
        frac_within_deadline: mean(&within),
        frac_on_time: mean(&on_time),
        total_delay: mean(&delay),
        deadline_stats: opts.job_deadlines.as_ref().map(|_| DeadlineStats {
            total_deadline_delay: mean(&dl_delay),
            late_jobs: mean(&dl_late),
            frac_runs_late: mean(&dl_any),
        }),
    })
}

/// Pairwise (cascade) summation; error grows as O(log n) rather than O(n).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
