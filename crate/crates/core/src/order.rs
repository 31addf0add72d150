//! The combined order of a schedule: precedence arcs unioned with
//! machine-chain arcs, its topological order, transitive reduction and
//! ancestor sets.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::Schedule;

/// Fixed-size bitset over job indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSet {
    words: Vec<u64>,
}

impl JobSet {
    pub fn new(n: usize) -> Self {
        JobSet { words: vec![0; n.div_ceil(64)] }
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn union_with(&mut self, other: &JobSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + bit)
            })
        })
    }
}

/// DAG over jobs. Direct arcs are those of the transitive reduction; a
/// machine arc duplicated by a precedence arc counts once.
#[derive(Debug, Clone)]
pub struct CombinedOrder {
    n: usize,
    topo: Vec<usize>,
    /// Direct successors, ascending.
    dsucc: Vec<Vec<usize>>,
    /// Direct predecessors, ascending.
    dpred: Vec<Vec<usize>>,
    /// Built on first use; only some measures need full predecessor sets.
    ancestors: OnceLock<Vec<JobSet>>,
}

impl CombinedOrder {
    pub fn from_schedule(schedule: &Schedule) -> Result<Self> {
        Self::from_arcs(schedule.n(), schedule.all_arcs())
    }

    /// Builds the order from an arbitrary arc list; fails on a cycle.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in arcs {
            succ[u].push(v);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let topo = topological_order(&succ)?;

        // descendant bitsets in one flat buffer, filled in reverse topological order
        let words = n.div_ceil(64);
        let mut desc = vec![0u64; n * words];
        for &u in topo.iter().rev() {
            for &v in &succ[u] {
                for k in 0..words {
                    let bits = desc[v * words + k];
                    desc[u * words + k] |= bits;
                }
                desc[u * words + v / 64] |= 1 << (v % 64);
            }
        }
        let reaches = |w: usize, v: usize| desc[w * words + v / 64] >> (v % 64) & 1 == 1;

        let mut dsucc: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut dpred: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &succ[u] {
                if !succ[u].iter().any(|&w| w != v && reaches(w, v)) {
                    dsucc[u].push(v);
                    dpred[v].push(u);
                }
            }
        }

        Ok(CombinedOrder { n, topo, dsucc, dpred, ancestors: OnceLock::new() })
    }

    fn build_ancestors(&self) -> Vec<JobSet> {
        let mut ancestors = vec![JobSet::new(self.n); self.n];
        for &v in &self.topo {
            let mut a = JobSet::new(self.n);
            for &u in &self.dpred[v] {
                a.insert(u);
                a.union_with(&ancestors[u]);
            }
            ancestors[v] = a;
        }
        ancestors
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn topo(&self) -> &[usize] {
        &self.topo
    }

    pub fn direct_successors(&self, j: usize) -> &[usize] {
        &self.dsucc[j]
    }

    pub fn direct_predecessors(&self, j: usize) -> &[usize] {
        &self.dpred[j]
    }

    /// All predecessors of `j` (transitive closure).
    pub fn predecessors(&self, j: usize) -> &JobSet {
        &self.ancestors.get_or_init(|| self.build_ancestors())[j]
    }

    pub fn ndp(&self, j: usize) -> usize {
        self.dpred[j].len()
    }

    pub fn nds(&self, j: usize) -> usize {
        self.dsucc[j].len()
    }

    /// Direct arcs, sorted.
    pub fn direct_arcs(&self) -> Vec<(usize, usize)> {
        let mut arcs: Vec<_> = (0..self.n).flat_map(|u| self.dsucc[u].iter().map(move |&v| (u, v))).collect();
        arcs.sort_unstable();
        arcs
    }

    /// Jobs without successors.
    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&j| self.dsucc[j].is_empty())
    }
}

/// Kahn's algorithm, lowest index first among ready jobs.
fn topological_order(succ: &[Vec<usize>]) -> Result<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &v in s {
            indeg[v] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&v| indeg[v] > 0).unwrap_or(0);
        return Err(Error::Cycle(stuck));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Schedule};
    use std::sync::Arc;

    fn sched(p: &[f64], m: usize, prec: Vec<(usize, usize)>, order: Vec<Vec<usize>>, s: Vec<f64>) -> Schedule {
        let inst = Instance::deterministic(m, 100.0, p, &vec![0.0; p.len()], prec).unwrap();
        Schedule::new(Arc::new(inst), order, s).unwrap()
    }

    #[test]
    fn machine_chain_only() {
        let s = sched(&[1.0, 1.0], 1, vec![], vec![vec![0, 1]], vec![0.0, 1.0]);
        assert_eq!(s.combined_order().direct_arcs(), vec![(0, 1)]);
    }

    #[test]
    fn precedence_across_machines() {
        let s = sched(&[1.0, 1.0], 2, vec![(0, 1)], vec![vec![0], vec![1]], vec![0.0, 1.0]);
        assert_eq!(s.combined_order().direct_arcs(), vec![(0, 1)]);
    }

    #[test]
    fn transitive_arc_is_not_direct() {
        let s = sched(&[1.0; 3], 1, vec![(0, 2)], vec![vec![0, 1, 2]], vec![0.0, 1.0, 2.0]);
        let order = s.combined_order();
        assert_eq!(order.direct_arcs(), vec![(0, 1), (1, 2)]);
        assert_eq!(order.predecessors(2).iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn duplicated_machine_arc_counts_once() {
        let s = sched(&[1.0; 2], 1, vec![(0, 1)], vec![vec![0, 1]], vec![0.0, 1.0]);
        let order = s.combined_order();
        assert_eq!(order.nds(0), 1);
        assert_eq!(order.ndp(1), 1);
    }

    #[test]
    fn single_machine_no_precedence_is_a_chain() {
        let n = 7;
        let s = sched(&vec![1.0; n], 1, vec![], vec![(0..n).collect()], (0..n).map(|i| i as f64).collect());
        assert_eq!(s.combined_order().direct_arcs().len(), n - 1);
    }

    #[test]
    fn cycle_detected() {
        assert!(matches!(CombinedOrder::from_arcs(2, [(0, 1), (1, 0)]), Err(Error::Cycle(_))));
    }

    #[test]
    fn jobset_iterates_in_order() {
        let mut s = JobSet::new(130);
        for i in [129, 3, 64, 0] {
            s.insert(i);
        }
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 64, 129]);
        assert_eq!(s.len(), 4);
    }
}
