//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's algorithms; schedules are plain
//! arrays and every quantity is recomputed from its definition.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use robsched::measures::{self, EsdScope};
use robsched::SlackProfile;

pub const EPS: f64 = 1e-9;

/// A schedule as raw data.
#[derive(Debug, Clone)]
pub struct Plain {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    pub prec: Vec<(usize, usize)>,
    pub machines: Vec<Vec<usize>>,
    pub s: Vec<f64>,
    pub d: f64,
}

impl Plain {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Precedence plus consecutive machine pairs, deduplicated.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut arcs = self.prec.clone();
        for seq in &self.machines {
            for w in seq.windows(2) {
                arcs.push((w[0], w[1]));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        arcs
    }

    pub fn from_schedule(s: &robsched::Schedule) -> Plain {
        let inst = s.instance();
        Plain {
            p: inst.durations(),
            r: inst.releases(),
            prec: inst.precedence.clone(),
            machines: s.machine_order().to_vec(),
            s: s.start().to_vec(),
            d: inst.deadline,
        }
    }

    pub fn schedule(&self) -> robsched::Schedule {
        let inst = robsched::Instance::deterministic(self.machines.len(), self.d, &self.p, &self.r, self.prec.clone()).unwrap();
        robsched::Schedule::new(std::sync::Arc::new(inst), self.machines.clone(), self.s.clone()).unwrap()
    }
}

/// Every path (as a job list) starting at `from`, following arcs.
pub fn paths_from(arcs: &[(usize, usize)], from: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![from]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        for &(u, v) in arcs {
            if u == last {
                let mut next = path.clone();
                next.push(v);
                stack.push(next);
            }
        }
        out.push(path);
    }
    out
}

/// Brute-force quantities of one schedule.
#[derive(Debug, Clone)]
pub struct Brute {
    pub reach: Vec<Vec<bool>>,
    pub direct: Vec<Vec<bool>>,
    pub ls: Vec<f64>,
    pub ts: Vec<f64>,
    pub fs: Vec<f64>,
    pub ndp: Vec<usize>,
    pub nds: Vec<usize>,
}

pub fn brute(plain: &Plain) -> Brute {
    let n = plain.n();
    let arcs = plain.arcs();
    let mut reach = vec![vec![false; n]; n];
    let mut ls = vec![f64::INFINITY; n];
    for j in 0..n {
        for path in paths_from(&arcs, j) {
            let last = *path.last().unwrap();
            if last != j {
                reach[j][last] = true;
            }
            let len: f64 = path.iter().map(|&k| plain.p[k]).sum();
            ls[j] = ls[j].min(plain.d - len);
        }
    }
    let mut direct = vec![vec![false; n]; n];
    for &(u, v) in &arcs {
        let longer = (0..n).any(|k| k != v && arcs.contains(&(u, k)) && reach[k][v]);
        direct[u][v] = !longer;
    }
    let ts: Vec<f64> = (0..n).map(|j| ls[j] - plain.s[j]).collect();
    let fs: Vec<f64> = (0..n)
        .map(|j| {
            let succ: Vec<usize> = (0..n).filter(|&i| direct[j][i]).collect();
            if succ.is_empty() {
                plain.d - plain.s[j] - plain.p[j]
            } else {
                succ.iter().map(|&i| plain.s[i] - plain.s[j] - plain.p[j]).fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    let ndp = (0..n).map(|j| (0..n).filter(|&i| direct[i][j]).count()).collect();
    let nds = (0..n).map(|j| (0..n).filter(|&i| direct[j][i]).count()).collect();
    Brute { reach, direct, ls, ts, fs, ndp, nds }
}

/// RM1..RM12, RM17, RM18 and Cmax from their definitions; index k holds RMk
/// (index 0 holds Cmax).
pub fn brute_measures(plain: &Plain, b: &Brute, lambda: &[f64], lambda5: &[f64]) -> [f64; 19] {
    let n = plain.n();
    let p = &plain.p;
    let mut v = [f64::NAN; 19];
    v[0] = (0..n).map(|j| plain.s[j] + p[j]).fold(f64::NEG_INFINITY, f64::max);
    v[1] = b.ts.iter().sum();
    v[2] = b.fs.iter().sum();
    v[3] = b.ts.iter().copied().fold(f64::INFINITY, f64::min);
    v[4] = (0..n).map(|j| b.fs[j] / p[j]).fold(f64::INFINITY, f64::min);
    v[5] = (0..n).map(|j| b.fs[j].min(lambda5[j] * p[j])).sum();
    v[6] = (0..n).filter(|&j| b.fs[j] > EPS).count() as f64;
    v[7] = (0..n).map(|j| b.fs[j] * p[j]).sum();
    v[8] = (0..n).map(|j| b.fs[j] * b.ndp[j] as f64).sum();
    v[9] = (0..n).map(|j| b.fs[j] * b.nds[j] as f64).sum();
    v[10] = (0..n).map(|j| b.fs[j] * b.nds[j] as f64 * p[j]).sum();
    let (mut rm11, mut rm12) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            if i == j || b.reach[i][j] {
                if b.fs[j] >= lambda[i] * p[i] - EPS {
                    rm11 += 1.0;
                } else {
                    rm12 += 1.0;
                }
            }
        }
    }
    v[11] = rm11;
    v[12] = rm12;
    v[17] = (0..n)
        .map(|j| {
            let preds: Vec<usize> = (0..n).filter(|&i| b.direct[i][j]).collect();
            if preds.is_empty() {
                1.0
            } else {
                preds.iter().filter(|&&i| b.fs[i] >= lambda[i] * p[i] - EPS).count() as f64 / preds.len() as f64
            }
        })
        .sum();
    // ESD by memoised recursion over all predecessors
    fn esd(j: usize, b: &Brute, lp: &[f64], memo: &mut Vec<Option<f64>>) -> f64 {
        if let Some(v) = memo[j] {
            return v;
        }
        let n = lp.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            if b.reach[i][j] {
                let push = lp[i] + esd(i, b, lp, memo) - b.fs[i];
                if push > EPS {
                    best = best.max(push);
                }
            }
        }
        memo[j] = Some(best);
        best
    }
    let lp: Vec<f64> = (0..n).map(|i| lambda[i] * p[i]).collect();
    let mut memo = vec![None; n];
    v[18] = (0..n).map(|j| esd(j, b, &lp, &mut memo)).sum();
    v
}

/// Random small schedule: random precedence DAG, machines ordered along a
/// random linear extension, starts = earliest starts plus random gaps.
pub fn random_plain(rng: &mut ChaCha8Rng, n: usize, m: usize, integral: bool) -> Plain {
    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if integral {
            rng.random_range(lo as i64..=hi as i64) as f64
        } else {
            rng.random_range(lo..hi)
        }
    };
    let p: Vec<f64> = (0..n).map(|_| draw(rng, 1.0, 6.0)).collect();
    let r: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 0.0 } else { draw(rng, 0.0, 3.0) }).collect();
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(rng);
    let mut prec = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.3) {
                prec.push((topo[a], topo[b]));
            }
        }
    }
    let mut machines = vec![Vec::new(); m];
    for &j in &topo {
        machines[rng.random_range(0..m)].push(j);
    }
    let mut plain = Plain { p, r, prec, machines, s: vec![0.0; n], d: 0.0 };
    let arcs = plain.arcs();
    for &j in &topo {
        let ready = arcs.iter().filter(|a| a.1 == j).map(|a| plain.s[a.0] + plain.p[a.0]).fold(plain.r[j], f64::max);
        let gap = if rng.random_bool(0.4) { 0.0 } else { draw(rng, 0.0, 3.0) };
        plain.s[j] = ready + gap;
    }
    let cmax = (0..n).map(|j| plain.s[j] + plain.p[j]).fold(0.0, f64::max);
    plain.d = cmax + if rng.random_bool(0.3) { 0.0 } else { draw(rng, 0.0, 5.0) };
    plain
}

/// Max-min weighted window width by bisection on B, testing each B with a
/// forward longest-path pass over all arcs.
pub fn rm14_bisection(plain: &Plain, coef: &[f64]) -> f64 {
    let n = plain.n();
    let arcs = plain.arcs();
    // Kahn order over all arcs
    let mut indeg = vec![0; n];
    for &(_, v) in &arcs {
        indeg[v] += 1;
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        for &(a, v) in &arcs {
            if a == u {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    order.push(v);
                }
            }
        }
        k += 1;
    }
    let feasible = |b: f64| {
        let mut e = plain.s.clone();
        for &j in &order {
            for &(i, v) in &arcs {
                if v == j {
                    e[j] = e[j].max(e[i] + coef[i] * b + plain.p[i]);
                }
            }
        }
        (0..n).all(|j| e[j] + coef[j] * b + plain.p[j] <= plain.d + 1e-12)
    };
    let (mut lo, mut hi) = (0.0, plain.d + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Random feasible interval assignment: random width proportions scaled by
/// the largest feasible factor, or a random fraction of it. Returns the total
/// width. `preds` lists every arc's tail per head.
pub fn random_interval_total(plain: &Plain, rng: &mut ChaCha8Rng, order: &[usize], preds: &[Vec<usize>]) -> f64 {
    let n = plain.n();
    let w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect();
    let mut e = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut layout = |alpha: f64| -> Option<f64> {
        for &j in order {
            e[j] = preds[j].iter().map(|&i| l[i] + plain.p[i]).fold(plain.s[j], f64::max);
            l[j] = e[j] + alpha * w[j];
            if l[j] + plain.p[j] > plain.d + 1e-12 {
                return None;
            }
        }
        Some((0..n).map(|j| l[j] - e[j]).sum())
    };
    let (mut lo, mut hi) = (0.0, plain.d + 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if layout(mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = if rng.random_bool(0.5) { lo } else { lo * rng.random::<f64>() };
    layout(alpha).unwrap_or(0.0)
}

pub fn arc_predecessors(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut preds = vec![Vec::new(); n];
    for &(u, v) in arcs {
        preds[v].push(u);
    }
    preds
}

pub fn topo_order(n: usize, arcs: &[(usize, usize)]) -> Vec<usize> {
    let mut indeg = vec![0; n];
    for &(_, v) in arcs {
        indeg[v] += 1;
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        for &(a, v) in arcs {
            if a == u {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    order.push(v);
                }
            }
        }
        k += 1;
    }
    order
}

/// Spearman ρ from the rank definition: rank = 1 + #smaller + (#equal - 1)/2.
pub fn spearman_brute(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let eq = v.iter().filter(|&&b| b == a).count() as f64;
                1.0 + less + (eq - 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// U statistic by pair counting.
pub fn u_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided p-value by enumerating every split of the pooled sample.
pub fn mwu_enumerated(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n1, n) = (a.len(), pooled.len());
    let centre = (a.len() * b.len()) as f64 / 2.0;
    let u_obs = u_pairs(a, b);
    let (mut hit, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (k, &v) in pooled.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    x.push(v)
                } else {
                    y.push(v)
                }
            }
            (x, y)
        };
        total += 1;
        if (u_pairs(&x, &y) - centre).abs() >= (u_obs - centre).abs() - 1e-12 {
            hit += 1;
        }
    }
    (u_obs, hit as f64 / total as f64)
}

/// Monte-Carlo P(makespan <= d) under the no-early-start rule with
/// independent normal durations (negative draws clipped at zero).
pub fn mc_on_time(plain: &Plain, cv: f64, reps: usize, rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, Normal};
    let n = plain.n();
    let arcs = plain.arcs();
    let order = topo_order(n, &arcs);
    let preds: Vec<Vec<usize>> = (0..n).map(|j| arcs.iter().filter(|a| a.1 == j).map(|a| a.0).collect()).collect();
    let laws: Vec<Normal<f64>> = plain.p.iter().map(|&p| Normal::new(p, cv * p).unwrap()).collect();
    let mut y = vec![0.0; n];
    let mut ok = 0usize;
    for _ in 0..reps {
        let mut cmax: f64 = 0.0;
        for &j in &order {
            let x = preds[j].iter().map(|&i| y[i]).fold(plain.s[j], f64::max);
            y[j] = x + laws[j].sample(rng).max(0.0);
            cmax = cmax.max(y[j]);
        }
        if cmax <= plain.d {
            ok += 1;
        }
    }
    ok as f64 / reps as f64
}

// Library comparison helpers shared by the oracle tests and the acceptance run.

pub const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

/// Compares the library against the path-enumeration oracle; returns the
/// first disagreement.
pub fn check_against_library(plain: &Plain, lambda: &[f64], lambda5: &[f64]) -> Result<(), String> {
    let sched = plain.schedule();
    let prof = SlackProfile::new(&sched);
    let b = brute(plain);
    let n = plain.n();
    for j in 0..n {
        for (what, lib, want) in [("ls", prof.ls[j], b.ls[j]), ("ts", prof.ts[j], b.ts[j]), ("fs", prof.fs[j], b.fs[j])] {
            if !close(lib, want) {
                return Err(format!("{what}[{j}] = {lib}, expected {want}"));
            }
        }
        if prof.ndp(j) != b.ndp[j] || prof.nds(j) != b.nds[j] {
            return Err(format!("direct arc counts differ at job {j}"));
        }
    }
    let p = &plain.p;
    let (rm11, rm12) = measures::rm11_rm12(&prof, p, lambda);
    let lib = [
        (0, measures::cmax(&sched)),
        (1, measures::rm1(&prof)),
        (2, measures::rm2(&prof)),
        (3, measures::rm3(&prof)),
        (4, measures::rm4(&prof, p)),
        (5, measures::rm5(&prof, p, lambda5)),
        (6, measures::rm6(&prof)),
        (7, measures::rm7(&prof, p)),
        (8, measures::rm8(&prof)),
        (9, measures::rm9(&prof)),
        (10, measures::rm10(&prof, p)),
        (11, rm11),
        (12, rm12),
        (17, measures::rm17(&prof, p, lambda)),
        (18, measures::rm18(&prof, p, lambda, EsdScope::AllPredecessors).0),
    ];
    let want = brute_measures(plain, &b, lambda, lambda5);
    for (k, v) in lib {
        if !close(v, want[k]) {
            return Err(format!("measure {k}: {v}, expected {}", want[k]));
        }
    }
    Ok(())
}

pub fn random_lambda(rng: &mut ChaCha8Rng, n: usize, integral: bool) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => 0.0,
            // multiples of 0.5 produce exact ties with integral slacks
            1 if integral => rng.random_range(1..=4) as f64 * 0.5,
            _ => rng.random_range(0.0..1.5),
        })
        .collect()
}


fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Moment-matched max of two independent normals given as (mean, variance).
pub fn clark_max(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let theta = (a.1 + b.1).sqrt();
    if theta == 0.0 {
        return (a.0.max(b.0), 0.0);
    }
    let alpha = (a.0 - b.0) / theta;
    let dens = (-0.5 * alpha * alpha).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (pa, pb) = (std_normal_cdf(alpha), std_normal_cdf(-alpha));
    let m1 = a.0 * pa + b.0 * pb + theta * dens;
    let m2 = (a.0 * a.0 + a.1) * pa + (b.0 * b.0 + b.1) * pb + (a.0 + b.0) * theta * dens;
    (m1, (m2 - m1 * m1).max(0.0))
}

/// P(makespan <= d) by the pairwise normal recursion: direct predecessors
/// folded in ascending id, then the planned start, then the terminals.
pub fn clark_on_time(plain: &Plain, cv: f64) -> f64 {
    let n = plain.n();
    let b = brute(plain);
    let arcs = plain.arcs();
    let mut y = vec![(0.0, 0.0); n];
    for j in topo_order(n, &arcs) {
        let ready = (0..n).filter(|&i| b.direct[i][j]).map(|i| y[i]).reduce(clark_max);
        let x = match ready {
            Some(r) => clark_max(r, (plain.s[j], 0.0)),
            None => (plain.s[j], 0.0),
        };
        let sd = cv * plain.p[j];
        y[j] = (x.0 + plain.p[j], x.1 + sd * sd);
    }
    let (mu, var) = (0..n).filter(|&j| (0..n).all(|i| !b.direct[j][i])).map(|j| y[j]).reduce(clark_max).unwrap();
    if var == 0.0 {
        f64::from(u8::from(mu <= plain.d))
    } else {
        std_normal_cdf((plain.d - mu) / var.sqrt())
    }
}
