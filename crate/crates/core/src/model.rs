//! Instances, schedules and their structural checks.
//!
//! An [`Instance`] is a set of jobs with expected durations, release dates,
//! precedence arcs, a machine count and a global deadline. A [`Schedule`]
//! assigns every job to one machine, orders the jobs on each machine, and
//! fixes a planned start time per job.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::CombinedOrder;
use crate::stochastic::DistributionSpec;

/// Absolute tolerance for every feasibility and threshold comparison on times.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    /// Expected processing time.
    pub p: f64,
    /// Release date.
    pub r: f64,
    pub dist: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub deadline: f64,
    pub jobs: Vec<Job>,
    pub precedence: Vec<(usize, usize)>,
}

impl Instance {
    /// Builds an instance and checks its invariants.
    pub fn new(m: usize, deadline: f64, jobs: Vec<Job>, precedence: Vec<(usize, usize)>) -> Result<Self> {
        let instance = Instance { n: jobs.len(), m, deadline, jobs, precedence };
        instance.check()?;
        Ok(instance)
    }

    /// Convenience constructor: every job gets a deterministic duration law
    /// matching its expected processing time.
    pub fn deterministic(m: usize, deadline: f64, p: &[f64], r: &[f64], precedence: Vec<(usize, usize)>) -> Result<Self> {
        if p.len() != r.len() {
            return Err(Error::InvalidInstance("p and r differ in length".into()));
        }
        let jobs = p
            .iter()
            .zip(r)
            .enumerate()
            .map(|(id, (&p, &r))| Job { id, p, r, dist: DistributionSpec::deterministic(p) })
            .collect();
        Self::new(m, deadline, jobs, precedence)
    }

    /// Validates the invariants: indices in range, positive durations and
    /// deadline, non-negative release dates, acyclic precedence.
    pub fn check(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInstance("machine count must be at least 1".into()));
        }
        if self.jobs.is_empty() {
            return Err(Error::InvalidInstance("an instance needs at least one job".into()));
        }
        if self.n != self.jobs.len() {
            return Err(Error::InvalidInstance(format!("n = {} but {} jobs listed", self.n, self.jobs.len())));
        }
        if !(self.deadline > 0.0) || !self.deadline.is_finite() {
            return Err(Error::InvalidInstance(format!("deadline must be positive, got {}", self.deadline)));
        }
        for (idx, job) in self.jobs.iter().enumerate() {
            if job.id != idx {
                return Err(Error::InvalidInstance(format!("job at position {idx} has id {}", job.id)));
            }
            if !(job.p > 0.0) || !job.p.is_finite() {
                return Err(Error::InvalidInstance(format!("job {idx}: p must be positive, got {}", job.p)));
            }
            if !(job.r >= 0.0) || !job.r.is_finite() {
                return Err(Error::InvalidInstance(format!("job {idx}: r must be non-negative, got {}", job.r)));
            }
            job.dist.check().map_err(|e| Error::InvalidInstance(format!("job {idx}: {e}")))?;
            if (job.dist.mean - job.p).abs() > TIME_EPS * job.p.max(1.0) {
                return Err(Error::InvalidInstance(format!(
                    "job {idx}: distribution mean {} differs from p = {}",
                    job.dist.mean, job.p
                )));
            }
        }
        for &(i, j) in &self.precedence {
            if i >= self.n || j >= self.n {
                return Err(Error::InvalidInstance(format!("precedence arc ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidInstance(format!("self-loop on job {i}")));
            }
        }
        CombinedOrder::from_arcs(self.n, self.precedence.iter().copied())?;
        Ok(())
    }

    pub fn durations(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.p).collect()
    }

    pub fn releases(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.r).collect()
    }

    pub fn dists(&self) -> Vec<DistributionSpec> {
        self.jobs.iter().map(|j| j.dist).collect()
    }

    /// Replaces every job's duration law by `kind`/`cv` around its own mean.
    pub fn with_dist(&self, template: DistributionSpec) -> Instance {
        let mut out = self.clone();
        for job in &mut out.jobs {
            job.dist = DistributionSpec { mean: job.p, ..template };
        }
        out
    }
}

/// Deadline regime: one global deadline, or one deadline per job.
#[derive(Debug, Clone, PartialEq)]
pub enum Deadlines {
    Global(f64),
    PerJob(Vec<f64>),
}

impl Deadlines {
    #[inline]
    pub fn of(&self, job: usize) -> f64 {
        match self {
            Deadlines::Global(d) => *d,
            Deadlines::PerJob(ds) => ds[job],
        }
    }
}

/// A machine assignment with per-machine job order and planned starts.
#[derive(Debug, Clone)]
pub struct Schedule {
    instance: Arc<Instance>,
    machine_order: Vec<Vec<usize>>,
    start: Vec<f64>,
}

impl Schedule {
    /// Builds a schedule after checking its structure: `m` machine sequences
    /// that partition the jobs, one start per job, and an acyclic combined
    /// order. Timing feasibility is reported by [`Schedule::validate`].
    pub fn new(instance: Arc<Instance>, machine_order: Vec<Vec<usize>>, start: Vec<f64>) -> Result<Self> {
        let structural = structural_violations(&instance, &machine_order, &start);
        if let Some(v) = structural.first() {
            return Err(match v {
                Violation::Cycle { job } => Error::Cycle(*job),
                other => Error::InvalidSchedule(other.to_string()),
            });
        }
        Ok(Schedule { instance, machine_order, start })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn instance_arc(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn machine_order(&self) -> &[Vec<usize>] {
        &self.machine_order
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn n(&self) -> usize {
        self.instance.n
    }

    /// Same ordering, new start times.
    pub fn with_starts(&self, start: Vec<f64>) -> Result<Schedule> {
        if start.len() != self.instance.n {
            return Err(Error::InvalidSchedule(format!("expected {} start times, got {}", self.instance.n, start.len())));
        }
        Ok(Schedule { instance: Arc::clone(&self.instance), machine_order: self.machine_order.clone(), start })
    }

    /// Arcs between consecutive jobs on each machine.
    pub fn machine_arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.machine_order.iter().flat_map(|seq| seq.windows(2).map(|w| (w[0], w[1])))
    }

    /// Precedence arcs followed by machine-chain arcs.
    pub fn all_arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.instance.precedence.iter().copied().chain(self.machine_arcs())
    }

    pub fn combined_order(&self) -> CombinedOrder {
        CombinedOrder::from_schedule(self).expect("schedule structure checked at construction")
    }

    /// Planned makespan under expected durations.
    pub fn planned_makespan(&self) -> f64 {
        self.start
            .iter()
            .zip(&self.instance.jobs)
            .map(|(s, j)| s + j.p)
            .fold(0.0, f64::max)
    }

    /// Every invariant violation, including the planned makespan bound.
    pub fn validate(&self) -> Vec<Violation> {
        validate_parts(&self.instance, &self.machine_order, &self.start)
    }

    pub fn is_feasible(&self) -> bool {
        self.validate().is_empty()
    }
}

/// One broken schedule invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MachineCount { expected: usize, got: usize },
    StartCount { expected: usize, got: usize },
    UnknownJob { job: usize },
    DuplicateJob { job: usize },
    MissingJob { job: usize },
    Cycle { job: usize },
    NonFiniteStart { job: usize },
    Release { job: usize, start: f64, release: f64 },
    Overlap { pred: usize, succ: usize, pred_completion: f64, succ_start: f64 },
    Deadline { job: usize, completion: f64, deadline: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MachineCount { expected, got } => write!(f, "expected {expected} machine sequences, got {got}"),
            Violation::StartCount { expected, got } => write!(f, "expected {expected} start times, got {got}"),
            Violation::UnknownJob { job } => write!(f, "job {job} does not exist"),
            Violation::DuplicateJob { job } => write!(f, "job {job} assigned more than once"),
            Violation::MissingJob { job } => write!(f, "job {job} is not assigned to any machine"),
            Violation::Cycle { job } => write!(f, "combined order has a cycle through job {job}"),
            Violation::NonFiniteStart { job } => write!(f, "job {job} has a non-finite start time"),
            Violation::Release { job, start, release } => {
                write!(f, "job {job} starts at {start} before its release date {release}")
            }
            Violation::Overlap { pred, succ, pred_completion, succ_start } => write!(
                f,
                "job {succ} starts at {succ_start} before predecessor {pred} completes at {pred_completion}"
            ),
            Violation::Deadline { job, completion, deadline } => {
                write!(f, "job {job} completes at {completion} after the deadline {deadline}")
            }
        }
    }
}

fn structural_violations(instance: &Instance, machine_order: &[Vec<usize>], start: &[f64]) -> Vec<Violation> {
    let n = instance.n;
    let mut out = Vec::new();
    if machine_order.len() != instance.m {
        out.push(Violation::MachineCount { expected: instance.m, got: machine_order.len() });
    }
    if start.len() != n {
        out.push(Violation::StartCount { expected: n, got: start.len() });
    }
    let mut seen = vec![false; n];
    for &job in machine_order.iter().flatten() {
        if job >= n {
            out.push(Violation::UnknownJob { job });
        } else if seen[job] {
            out.push(Violation::DuplicateJob { job });
        } else {
            seen[job] = true;
        }
    }
    out.extend(seen.iter().enumerate().filter(|(_, &s)| !s).map(|(job, _)| Violation::MissingJob { job }));
    if out.is_empty() {
        let arcs = instance
            .precedence
            .iter()
            .copied()
            .chain(machine_order.iter().flat_map(|seq| seq.windows(2).map(|w| (w[0], w[1]))));
        if let Err(Error::Cycle(job)) = CombinedOrder::from_arcs(n, arcs) {
            out.push(Violation::Cycle { job });
        }
    }
    out
}

/// Checks every schedule invariant on raw parts and returns all violations.
pub fn validate_parts(instance: &Instance, machine_order: &[Vec<usize>], start: &[f64]) -> Vec<Violation> {
    let mut out = structural_violations(instance, machine_order, start);
    if out.iter().any(|v| !matches!(v, Violation::Cycle { .. })) {
        return out;
    }
    for (job, &s) in start.iter().enumerate() {
        if !s.is_finite() {
            out.push(Violation::NonFiniteStart { job });
        }
    }
    for (job, j) in instance.jobs.iter().enumerate() {
        if start[job] < j.r - TIME_EPS {
            out.push(Violation::Release { job, start: start[job], release: j.r });
        }
    }
    let arcs = instance
        .precedence
        .iter()
        .copied()
        .chain(machine_order.iter().flat_map(|seq| seq.windows(2).map(|w| (w[0], w[1]))));
    for (pred, succ) in arcs {
        let done = start[pred] + instance.jobs[pred].p;
        if start[succ] < done - TIME_EPS {
            out.push(Violation::Overlap { pred, succ, pred_completion: done, succ_start: start[succ] });
        }
    }
    for (job, j) in instance.jobs.iter().enumerate() {
        let completion = start[job] + j.p;
        if completion > instance.deadline + TIME_EPS {
            out.push(Violation::Deadline { job, completion, deadline: instance.deadline });
        }
    }
    out
}
