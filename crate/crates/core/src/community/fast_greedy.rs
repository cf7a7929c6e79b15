//! Clauset–Newman–Moore greedy agglomeration.
//!
//! Each community keeps a sorted map of `ΔQ` towards its neighbouring
//! communities and a global max-heap holds candidate merges. Heap entries
//! are validated lazily against the maps, so stale entries are skipped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::graph::Graph;
use crate::partition::Partition;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dq: f64,
    i: usize,
    j: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Largest ΔQ first; ties go to the lexicographically smallest pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.dq
            .total_cmp(&other.dq)
            .then_with(|| (other.i, other.j).cmp(&(self.i, self.j)))
    }
}

fn candidate(dq: f64, a: usize, b: usize) -> Candidate {
    Candidate {
        dq,
        i: a.min(b),
        j: a.max(b),
    }
}

/// Partition at the agglomeration step of maximal modularity.
pub fn detect_fast_greedy(g: &Graph) -> Partition {
    let n = g.node_count();
    let m = g.edge_count();
    if m == 0 {
        log::warn!("fast greedy on a graph without edges; returning singletons");
        return Partition::singletons(n);
    }
    let two_m = 2.0 * m as f64;
    let mut a: Vec<f64> = (0..n).map(|u| g.degree(u) as f64 / two_m).collect();
    let mut dq: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut heap = BinaryHeap::with_capacity(m);
    for &(u, v) in g.edges() {
        let val = 2.0 * (1.0 / two_m - a[u] * a[v]);
        dq[u].insert(v, val);
        dq[v].insert(u, val);
        heap.push(candidate(val, u, v));
    }
    let mut alive = vec![true; n];
    let mut q: f64 = -a.iter().map(|x| x * x).sum::<f64>();
    let mut best_q = q;
    let mut best_step = 0usize;
    let mut merges: Vec<(usize, usize)> = Vec::with_capacity(n);

    while let Some(c) = heap.pop() {
        if !alive[c.i] || !alive[c.j] {
            continue;
        }
        match dq[c.i].get(&c.j) {
            Some(v) if v.to_bits() == c.dq.to_bits() => {}
            _ => continue,
        }
        let (keep, gone) = (c.i, c.j);
        let map_keep = std::mem::take(&mut dq[keep]);
        let map_gone = std::mem::take(&mut dq[gone]);
        let (mut big, small, a_small) = if map_keep.len() >= map_gone.len() {
            (map_keep, map_gone, a[gone])
        } else {
            (map_gone, map_keep, a[keep])
        };
        let a_big = a[keep] + a[gone] - a_small;
        big.remove(&keep);
        big.remove(&gone);
        for (k, w) in big.iter_mut() {
            *w = match small.get(k) {
                Some(v) => *w + v,
                None => *w - 2.0 * a_small * a[*k],
            };
        }
        for (&k, &v) in &small {
            if k == keep || k == gone || big.contains_key(&k) {
                continue;
            }
            big.insert(k, v - 2.0 * a_big * a[k]);
        }
        for (&k, &v) in &big {
            dq[k].remove(&gone);
            dq[k].insert(keep, v);
            heap.push(candidate(v, keep, k));
        }
        dq[keep] = big;
        a[keep] += a[gone];
        a[gone] = 0.0;
        alive[gone] = false;
        q += c.dq;
        merges.push((keep, gone));
        if q > best_q {
            best_q = q;
            best_step = merges.len();
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(keep, gone) in &merges[..best_step] {
        let (rk, rg) = (find(&mut parent, keep), find(&mut parent, gone));
        parent[rg] = rk;
    }
    let roots: Vec<usize> = (0..n).map(|u| find(&mut parent, u)).collect();
    Partition::from_labels(&roots)
}
