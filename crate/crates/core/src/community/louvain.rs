//! Louvain multi-level modularity optimisation.

use rand::seq::SliceRandom;

use crate::community::modularity;
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rng::RngStream;

/// Gains closer than this to the stay-put gain count as ties.
const GAIN_EPS: f64 = 1e-12;
const MAX_SWEEPS: usize = 1000;

/// Weighted graph at one aggregation level. Self-loop weight `w` adds `2w`
/// to the node's strength.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(g: &Graph) -> Level {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.node_count())
            .map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        let strength: Vec<f64> = adj.iter().map(|l| l.len() as f64).collect();
        Level {
            two_m: strength.iter().sum(),
            self_loops: vec![0.0; adj.len()],
            strength,
            adj,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local-move phase. Returns the community of each node (canonical
    /// labels) and whether any node changed community.
    fn local_moves(&self, rng: &mut impl rand::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot: Vec<f64> = self.strength.clone();
        let mut links = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any_move = false;

        for _ in 0..MAX_SWEEPS {
            order.shuffle(rng);
            let mut moved = false;
            for &u in &order {
                let ku = self.strength[u];
                let current = comm[u];
                for &(v, w) in &self.adj[u] {
                    let c = comm[v];
                    if links[c] == 0.0 {
                        touched.push(c);
                    }
                    links[c] += w;
                }
                tot[current] -= ku;
                let gain = |c: usize, links: &[f64], tot: &[f64]| links[c] - tot[c] * ku / self.two_m;
                let stay = gain(current, &links, &tot);
                let mut best = current;
                let mut best_gain = stay;
                touched.sort_unstable();
                for &c in &touched {
                    if c == current {
                        continue;
                    }
                    let gc = gain(c, &links, &tot);
                    let improves_on_stay = gc > stay + GAIN_EPS;
                    if improves_on_stay && (best == current || gc > best_gain + GAIN_EPS) {
                        best = c;
                        best_gain = gc;
                    }
                }
                tot[best] += ku;
                if best != current {
                    comm[u] = best;
                    moved = true;
                }
                for &c in &touched {
                    links[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (Partition::from_labels(&comm).labels().to_vec(), any_move)
    }

    fn aggregate(&self, comm: &[usize]) -> Level {
        let k = comm.iter().copied().max().map_or(0, |x| x + 1);
        let mut self_loops = vec![0.0; k];
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for u in 0..self.len() {
            let cu = comm[u];
            self_loops[cu] += self.self_loops[u];
            for &(v, w) in &self.adj[u] {
                if v < u {
                    continue;
                }
                let cv = comm[v];
                if cu == cv {
                    self_loops[cu] += w;
                } else {
                    *maps[cu].entry(cv).or_insert(0.0) += w;
                    *maps[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        let strength: Vec<f64> = adj
            .iter()
            .zip(&self_loops)
            .map(|(l, s)| l.iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * s)
            .collect();
        Level {
            adj,
            self_loops,
            strength,
            two_m: self.two_m,
        }
    }
}

/// Louvain partition. The node sweep order of every pass is a permutation
/// drawn from `seed`, so results are reproducible per seed.
pub fn detect_louvain(g: &Graph, seed: u64) -> Partition {
    let n = g.node_count();
    if g.edge_count() == 0 {
        log::warn!("louvain on a graph without edges; returning singletons");
        return Partition::singletons(n);
    }
    let mut rng = RngStream::root(seed).rng();
    let mut level = Level::from_graph(g);
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut best_q = modularity(g, &Partition::singletons(n)).expect("graph has edges");

    loop {
        let (comm, moved) = level.local_moves(&mut rng);
        if !moved {
            break;
        }
        let candidate: Vec<usize> = assignment.iter().map(|&c| comm[c]).collect();
        let q = modularity(g, &Partition::from_labels(&candidate)).expect("graph has edges");
        if q <= best_q + GAIN_EPS {
            break;
        }
        best_q = q;
        assignment = candidate;
        level = level.aggregate(&comm);
        if level.len() == 1 {
            break;
        }
    }
    Partition::from_labels(&assignment)
}
