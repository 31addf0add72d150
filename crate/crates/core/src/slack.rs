//! Latest start times, total slack and free slack under expected durations.

use crate::model::{Deadlines, Schedule};
use crate::order::CombinedOrder;

/// Latest start per job: `ls_j = min(d_j - p_j, min over direct successors i of ls_i - p_j)`,
/// evaluated in reverse topological order.
pub fn latest_start_times(order: &CombinedOrder, p: &[f64], deadlines: &Deadlines) -> Vec<f64> {
    let mut ls = vec![0.0; order.n()];
    for &j in order.topo().iter().rev() {
        let mut latest = deadlines.of(j) - p[j];
        for &i in order.direct_successors(j) {
            latest = latest.min(ls[i] - p[j]);
        }
        ls[j] = latest;
    }
    ls
}

/// Free slack per job: the gap to the earliest direct successor, or to the
/// job's deadline when it has no successors.
pub fn free_slack(order: &CombinedOrder, p: &[f64], start: &[f64], deadlines: &Deadlines) -> Vec<f64> {
    (0..order.n())
        .map(|j| {
            let succ = order.direct_successors(j);
            if succ.is_empty() {
                deadlines.of(j) - start[j] - p[j]
            } else {
                succ.iter().map(|&i| start[i] - start[j] - p[j]).fold(f64::INFINITY, f64::min)
            }
        })
        .collect()
}

/// Slack quantities of one schedule, together with the combined order they
/// were derived from.
#[derive(Debug, Clone)]
pub struct SlackProfile {
    pub order: CombinedOrder,
    pub ls: Vec<f64>,
    pub ts: Vec<f64>,
    pub fs: Vec<f64>,
}

impl SlackProfile {
    /// Profile against the instance's global deadline.
    pub fn new(schedule: &Schedule) -> Self {
        Self::with_deadlines(schedule, &Deadlines::Global(schedule.instance().deadline))
    }

    pub fn with_deadlines(schedule: &Schedule, deadlines: &Deadlines) -> Self {
        Self::from_order(schedule.combined_order(), schedule, deadlines)
    }

    pub fn from_order(order: CombinedOrder, schedule: &Schedule, deadlines: &Deadlines) -> Self {
        let p = schedule.instance().durations();
        let start = schedule.start();
        let ls = latest_start_times(&order, &p, deadlines);
        let ts = ls.iter().zip(start).map(|(l, s)| l - s).collect();
        let fs = free_slack(&order, &p, start, deadlines);
        SlackProfile { order, ls, ts, fs }
    }

    pub fn n(&self) -> usize {
        self.order.n()
    }

    pub fn ndp(&self, j: usize) -> usize {
        self.order.ndp(j)
    }

    pub fn nds(&self, j: usize) -> usize {
        self.order.nds(j)
    }
}
