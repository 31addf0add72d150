//! Random instances, earliest-start schedules and buffered variants.

use std::sync::Arc;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, IntervalWeights};
use crate::model::{Instance, Job, Schedule, TIME_EPS};
use crate::order::CombinedOrder;
use crate::rng::substream;
use crate::stochastic::DistributionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceGenConfig {
    pub n: usize,
    /// Number of precedence arcs.
    pub arcs: usize,
    pub m: usize,
    pub seed: u64,
    pub p_min: f64,
    pub p_max: f64,
    /// Largest release date; `n / 2` when absent.
    pub release_max: Option<usize>,
    pub integer_releases: bool,
    /// Duration law attached to every job, re-centred on its own `p_j`.
    pub dist: DistributionSpec,
    /// Whether the critical path length counts the release date of its head.
    pub cp_includes_release: bool,
}

impl InstanceGenConfig {
    pub fn new(n: usize, arcs: usize, m: usize, seed: u64) -> Self {
        InstanceGenConfig {
            n,
            arcs,
            m,
            seed,
            p_min: 1.0,
            p_max: 20.0,
            release_max: None,
            integer_releases: true,
            dist: DistributionSpec::normal(1.0, 0.25),
            cp_includes_release: true,
        }
    }
}

pub fn gen_instance(cfg: &InstanceGenConfig) -> Result<Instance> {
    let n = cfg.n;
    if n == 0 || cfg.m == 0 {
        return Err(Error::Argument("need at least one job and one machine".into()));
    }
    let max_arcs = n * (n - 1) / 2;
    if cfg.arcs > max_arcs {
        return Err(Error::Argument(format!("{} arcs requested but {n} jobs allow at most {max_arcs}", cfg.arcs)));
    }
    if !(cfg.p_min > 0.0 && cfg.p_max >= cfg.p_min) {
        return Err(Error::Argument("duration range must be positive and ordered".into()));
    }
    let mut rng = substream(cfg.seed, &[0x1A57]);
    let r_max = cfg.release_max.unwrap_or(n / 2);
    let mut jobs = Vec::with_capacity(n);
    for id in 0..n {
        let p = rng.random_range(cfg.p_min..=cfg.p_max);
        let r = if cfg.integer_releases {
            rng.random_range(0..=r_max) as f64
        } else {
            rng.random_range(0.0..=r_max as f64)
        };
        jobs.push(Job { id, p, r, dist: DistributionSpec { mean: p, ..cfg.dist } });
    }

    // arcs go forward in a random topological labelling
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let mut precedence: Vec<(usize, usize)> = index::sample(&mut rng, max_arcs, cfg.arcs)
        .into_iter()
        .map(|k| {
            let (a, b) = pair_from_index(k, n);
            (label[a], label[b])
        })
        .collect();
    precedence.sort_unstable();

    let mut inst = Instance { n, m: cfg.m, deadline: 1.0, jobs, precedence };
    inst.deadline = gen_deadline(&inst, cfg.cp_includes_release);
    inst.check()?;
    Ok(inst)
}

/// k-th pair (a, b) with a < b in row-major order.
fn pair_from_index(mut k: usize, n: usize) -> (usize, usize) {
    for a in 0..n {
        let row = n - 1 - a;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

/// `max(ℓ_cp (1 + 0.5 / √n_cp), 1.3 ℓ_min)`, where `ℓ_min` spreads the total
/// work plus the m smallest release dates over the machines and `ℓ_cp` is
/// the longest precedence path (with `n_cp` jobs; fewest jobs on ties).
pub fn gen_deadline(instance: &Instance, cp_includes_release: bool) -> f64 {
    let m = instance.m;
    let mut r = instance.releases();
    r.sort_by(f64::total_cmp);
    let total_p: f64 = instance.jobs.iter().map(|j| j.p).sum();
    let l_min = (total_p + r.iter().take(m).sum::<f64>()) / m as f64;

    let order = CombinedOrder::from_arcs(instance.n, instance.precedence.iter().copied())
        .expect("instance precedence is acyclic");
    let mut len = vec![0.0; instance.n];
    let mut count = vec![0usize; instance.n];
    for &j in order.topo() {
        let job = &instance.jobs[j];
        let (mut best, mut cnt) = (if cp_includes_release { job.r } else { 0.0 }, 0usize);
        for &i in order.direct_predecessors(j) {
            if len[i] > best + 1e-12 || (len[i] >= best - 1e-12 && count[i] < cnt) {
                best = len[i];
                cnt = count[i];
            }
        }
        len[j] = best + job.p;
        count[j] = cnt + 1;
    }
    let (l_cp, n_cp) = (0..instance.n).fold((0.0, 1usize), |(l, c), j| {
        if len[j] > l + 1e-12 || (len[j] >= l - 1e-12 && count[j] < c) {
            (len[j], count[j])
        } else {
            (l, c)
        }
    });
    (l_cp * (1.0 + 0.5 / (n_cp as f64).sqrt())).max(1.3 * l_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssConfig {
    /// Attempts (each with a fresh random stream) before giving up.
    pub max_attempts: usize,
}

impl Default for EssConfig {
    fn default() -> Self {
        EssConfig { max_attempts: 20 }
    }
}

/// Earliest start times for a machine ordering, or `None` when the
/// combined order has a cycle.
pub fn earliest_starts(instance: &Instance, prec_preds: &[Vec<usize>], machine_order: &[Vec<usize>]) -> Option<Vec<f64>> {
    let n = instance.n;
    let mut machine_pred = vec![usize::MAX; n];
    let mut machine_succ = vec![usize::MAX; n];
    for seq in machine_order {
        for w in seq.windows(2) {
            machine_pred[w[1]] = w[0];
            machine_succ[w[0]] = w[1];
        }
    }
    let mut indeg: Vec<usize> =
        (0..n).map(|j| prec_preds[j].len() + usize::from(machine_pred[j] != usize::MAX)).collect();
    let mut prec_succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, preds) in prec_preds.iter().enumerate() {
        for &i in preds {
            prec_succ[i].push(j);
        }
    }
    let mut start: Vec<f64> = instance.jobs.iter().map(|j| j.r).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut done = 0;
    while let Some(j) = stack.pop() {
        done += 1;
        let c = start[j] + instance.jobs[j].p;
        let ms = machine_succ[j];
        for &k in prec_succ[j].iter().chain((ms != usize::MAX).then_some(&ms)) {
            start[k] = start[k].max(c);
            indeg[k] -= 1;
            if indeg[k] == 0 {
                stack.push(k);
            }
        }
    }
    (done == n).then_some(start)
}

fn makespan(instance: &Instance, start: &[f64]) -> f64 {
    start.iter().zip(&instance.jobs).map(|(s, j)| s + j.p).fold(0.0, f64::max)
}

pub fn precedence_predecessors(instance: &Instance) -> Vec<Vec<usize>> {
    let mut preds = vec![Vec::new(); instance.n];
    for &(i, j) in &instance.precedence {
        if !preds[j].contains(&i) {
            preds[j].push(i);
        }
    }
    preds
}

/// Greedy list schedule: repeatedly start the job that can start earliest
/// on the machine where it completes earliest, breaking ties at random.
fn greedy(instance: &Instance, preds: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n = instance.n;
    let m = instance.m;
    let mut free = vec![0.0f64; m];
    let mut order = vec![Vec::new(); m];
    let mut completion = vec![f64::NAN; n];
    let mut scheduled = vec![false; n];
    let earliest_machine = |free: &[f64]| free.iter().copied().fold(f64::INFINITY, f64::min);
    for _ in 0..n {
        let ready = |j: usize, completion: &[f64]| preds[j].iter().map(|&i| completion[i]).fold(instance.jobs[j].r, f64::max);
        let candidates: Vec<(usize, f64)> = (0..n)
            .filter(|&j| !scheduled[j] && preds[j].iter().all(|&i| scheduled[i]))
            .map(|j| (j, ready(j, &completion).max(earliest_machine(&free))))
            .collect();
        let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = candidates.iter().filter(|c| c.1 <= best + TIME_EPS).map(|c| c.0).collect();
        let j = *tied.choose(rng).expect("acyclic precedence leaves a candidate");
        let rj = ready(j, &completion);
        let fin: Vec<f64> = free.iter().map(|&f| f.max(rj) + instance.jobs[j].p).collect();
        let best_fin = fin.iter().copied().fold(f64::INFINITY, f64::min);
        let machines: Vec<usize> = (0..m).filter(|&k| fin[k] <= best_fin + TIME_EPS).collect();
        let k = *machines.choose(rng).expect("at least one machine");
        completion[j] = fin[k];
        free[k] = fin[k];
        order[k].push(j);
        scheduled[j] = true;
    }
    order
}

/// A neighbourhood move on a machine ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Swap positions `a < b` on machine `k`.
    Swap { k: usize, a: usize, b: usize },
    /// Take the job at `(from, pos)` and insert it at index `at` of machine
    /// `to` (index counted after removal).
    Shift { from: usize, pos: usize, to: usize, at: usize },
}

pub fn swap_moves(order: &[Vec<usize>]) -> Vec<Move> {
    let mut out = Vec::new();
    for (k, seq) in order.iter().enumerate() {
        for a in 0..seq.len() {
            for b in a + 1..seq.len() {
                out.push(Move::Swap { k, a, b });
            }
        }
    }
    out
}

pub fn shift_moves(order: &[Vec<usize>]) -> Vec<Move> {
    let mut out = Vec::new();
    for (from, seq) in order.iter().enumerate() {
        for pos in 0..seq.len() {
            for (to, dest) in order.iter().enumerate() {
                let slots = if to == from { dest.len() } else { dest.len() + 1 };
                for at in 0..slots {
                    if to == from && at == pos {
                        continue;
                    }
                    out.push(Move::Shift { from, pos, to, at });
                }
            }
        }
    }
    out
}

pub fn apply_move(order: &[Vec<usize>], mv: Move) -> Vec<Vec<usize>> {
    let mut next = order.to_vec();
    match mv {
        Move::Swap { k, a, b } => next[k].swap(a, b),
        Move::Shift { from, pos, to, at } => {
            let job = next[from].remove(pos);
            next[to].insert(at, job);
        }
    }
    next
}

/// First improving move of the list (in the given order), if any.
fn first_improvement(
    instance: &Instance,
    preds: &[Vec<usize>],
    order: &[Vec<usize>],
    moves: &[Move],
    current: f64,
) -> Option<(Vec<Vec<usize>>, f64)> {
    for &mv in moves {
        let next = apply_move(order, mv);
        if let Some(start) = earliest_starts(instance, preds, &next) {
            let cmax = makespan(instance, &start);
            if cmax < current - TIME_EPS {
                return Some((next, cmax));
            }
        }
    }
    None
}

/// Hill climbing from `order` alternating the swap and shift neighbourhoods
/// with random scan order, until neither improves the makespan.
pub fn hill_climb(instance: &Instance, order: Vec<Vec<usize>>, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let preds = precedence_predecessors(instance);
    let mut order = order;
    let mut cmax = makespan(instance, &earliest_starts(instance, &preds, &order).expect("acyclic start"));
    loop {
        let mut moves = swap_moves(&order);
        moves.shuffle(rng);
        if let Some((next, c)) = first_improvement(instance, &preds, &order, &moves, cmax) {
            order = next;
            cmax = c;
            continue;
        }
        let mut moves = shift_moves(&order);
        moves.shuffle(rng);
        match first_improvement(instance, &preds, &order, &moves, cmax) {
            Some((next, c)) => {
                order = next;
                cmax = c;
            }
            None => return order,
        }
    }
}

/// Greedy construction plus hill climbing; retried with fresh randomness
/// until the makespan fits the deadline.
pub fn gen_earliest_start(instance: &Arc<Instance>, seed: u64, cfg: &EssConfig) -> Result<Schedule> {
    let preds = precedence_predecessors(instance);
    for attempt in 0..cfg.max_attempts.max(1) {
        let mut rng = substream(seed, &[0xE55, attempt as u64]);
        let order = hill_climb(instance, greedy(instance, &preds, &mut rng), &mut rng);
        let start = earliest_starts(instance, &preds, &order).expect("hill climbing keeps acyclicity");
        if makespan(instance, &start) <= instance.deadline + TIME_EPS {
            return Schedule::new(Arc::clone(instance), order, start);
        }
    }
    Err(Error::Generation(format!(
        "no earliest-start schedule within deadline {} after {} attempts",
        instance.deadline, cfg.max_attempts
    )))
}

/// Buffer-multiplier ranges and repetitions for [`diversify_buffers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferPlan {
    pub ranges: Vec<(f64, f64)>,
    pub repetitions: usize,
    pub include_max: bool,
    pub include_zero: bool,
}

impl Default for BufferPlan {
    /// `[0, 0.1] .. [0, 1]` then `[0.1, 1] .. [0.9, 1]`, 5 draws each, plus
    /// the full- and zero-buffer schedules: 97 schedules.
    fn default() -> Self {
        let up = (1..=10).map(|k| (0.0, k as f64 / 10.0));
        let low = (1..=9).map(|k| (k as f64 / 10.0, 1.0));
        BufferPlan { ranges: up.chain(low).collect(), repetitions: 5, include_max: true, include_zero: true }
    }
}

impl BufferPlan {
    pub fn len(&self) -> usize {
        self.ranges.len() * self.repetitions + usize::from(self.include_max) + usize::from(self.include_zero)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A buffered schedule with a short label of how it was produced.
#[derive(Debug, Clone)]
pub struct BufferedSchedule {
    pub label: String,
    pub schedule: Schedule,
}

/// Starts when job i's buffer `b_i` is scaled by `μ_i`:
/// `s_j = max(s_j^base, max over direct predecessors (s_i + p_i + μ_i b_i))`.
pub fn scaled_buffer_starts(order: &CombinedOrder, base: &[f64], p: &[f64], buffer: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut s = base.to_vec();
    for &j in order.topo() {
        for &i in order.direct_predecessors(j) {
            s[j] = s[j].max(s[i] + p[i] + mu[i] * buffer[i]);
        }
    }
    s
}

/// Buffered variants of an earliest-start schedule. Buffers are the window
/// widths of the max-min window LP; each variant scales them by per-job
/// multipliers drawn from the plan's ranges.
pub fn diversify_buffers(es: &Schedule, plan: &BufferPlan, seed: u64) -> Result<Vec<BufferedSchedule>> {
    let sol = lp::solve_rm14(es, &IntervalWeights::Uniform, None)?;
    let n = es.n();
    let buffer: Vec<f64> = (0..n).map(|j| sol.width(j).max(0.0)).collect();
    let order = es.combined_order();
    let p = es.instance().durations();
    let make = |mu: &[f64]| es.with_starts(scaled_buffer_starts(&order, es.start(), &p, &buffer, mu));

    let mut out = Vec::with_capacity(plan.len());
    for (ri, &(a, b)) in plan.ranges.iter().enumerate() {
        if !(0.0 <= a && a <= b) {
            return Err(Error::Argument(format!("invalid multiplier range [{a}, {b}]")));
        }
        for rep in 0..plan.repetitions {
            let mut rng = substream(seed, &[ri as u64, rep as u64]);
            let mu: Vec<f64> = (0..n).map(|_| if a == b { a } else { rng.random_range(a..=b) }).collect();
            out.push(BufferedSchedule { label: format!("u{a:.1}-{b:.1}k{rep}"), schedule: make(&mu)? });
        }
    }
    if plan.include_max {
        out.push(BufferedSchedule { label: "max".into(), schedule: make(&vec![1.0; n])? });
    }
    if plan.include_zero {
        out.push(BufferedSchedule { label: "zero".into(), schedule: make(&vec![0.0; n])? });
    }
    Ok(out)
}
