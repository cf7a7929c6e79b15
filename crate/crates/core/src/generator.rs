//! Modular random benchmark graphs with a prescribed modularity.
//!
//! Module sizes and degrees are drawn from truncated discrete power laws.
//! Every node splits its stubs into within-module stubs and global stubs;
//! within-module stubs are paired inside the module, global stubs across the
//! whole graph. The within-module fraction is solved for so that the
//! expected modularity of the planted partition equals the target. Self-loops
//! and multi-edges are then repaired with same-class double-edge swaps and
//! components are joined with degree-preserving swaps.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::modularity;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rng::RngStream;

pub const MAX_ATTEMPTS: usize = 100;
pub const Q_TOLERANCE: f64 = 0.05;
const REPAIR_TRIES_PER_EDGE: usize = 2000;
const DRAWS_PER_ATTEMPT: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub n_modules: usize,
    pub avg_degree: f64,
    pub target_q: f64,
    #[serde(default = "default_degree_exponent")]
    pub degree_exponent: f64,
    #[serde(default = "default_modsize_exponent")]
    pub modsize_exponent: f64,
    /// Degree cap; `None` means `floor(sqrt(n * avg_degree))`.
    #[serde(default)]
    pub degree_max: Option<usize>,
    pub seed: u64,
}

fn default_degree_exponent() -> f64 {
    2.5
}

fn default_modsize_exponent() -> f64 {
    2.0
}

impl GeneratorSpec {
    pub fn new(n: usize, n_modules: usize, avg_degree: f64, target_q: f64, seed: u64) -> Self {
        GeneratorSpec {
            n,
            n_modules,
            avg_degree,
            target_q,
            degree_exponent: default_degree_exponent(),
            modsize_exponent: default_modsize_exponent(),
            degree_max: None,
            seed,
        }
    }

    pub fn degree_cap(&self) -> usize {
        let cap = self
            .degree_max
            .unwrap_or_else(|| (self.n as f64 * self.avg_degree).sqrt().floor() as usize);
        cap.min(self.n.saturating_sub(1))
    }

    fn total_stubs(&self) -> usize {
        (self.n as f64 * self.avg_degree).round() as usize
    }

    fn module_size_bounds(&self) -> (usize, usize) {
        let lo = (self.n / (5 * self.n_modules)).max(2);
        let hi = (2 * self.n).div_ceil(self.n_modules).min(self.n);
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_modules < 1 {
            return bad("at least one module is required".into());
        }
        if self.n < 2 * self.n_modules {
            return bad(format!("{} nodes cannot form {} modules", self.n, self.n_modules));
        }
        if !(self.avg_degree >= 1.0) || self.avg_degree > (self.n - 1) as f64 {
            return bad(format!("average degree {} is out of range", self.avg_degree));
        }
        let ceiling = 1.0 - 1.0 / self.n_modules as f64;
        if !(0.0..1.0).contains(&self.target_q) || self.target_q > ceiling + 1e-9 {
            return bad(format!(
                "target modularity {} must lie in [0, {ceiling:.4}]",
                self.target_q
            ));
        }
        if self.total_stubs() % 2 == 1 {
            return bad(format!(
                "n * avg_degree rounds to the odd stub count {}",
                self.total_stubs()
            ));
        }
        if self.degree_cap() < 2 {
            return bad("degree cap must be at least 2".into());
        }
        if self.degree_exponent <= 0.0 || self.modsize_exponent < 0.0 {
            return bad("power-law exponents must be positive".into());
        }
        Ok(())
    }
}

/// A generated graph with its planted modules.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub planted: Partition,
    pub achieved_q: f64,
    /// 1-based index of the successful attempt.
    pub attempts: usize,
}

/// Planted-partition record written next to generated edge lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRecord {
    pub spec: GeneratorSpec,
    pub labels: Vec<usize>,
    #[serde(rename = "K")]
    pub k: usize,
    pub achieved_q: f64,
    pub attempts: usize,
}

impl LabeledGraph {
    pub fn record(&self, spec: &GeneratorSpec) -> PlantedRecord {
        PlantedRecord {
            spec: spec.clone(),
            labels: self.planted.labels().to_vec(),
            k: self.planted.community_count(),
            achieved_q: self.achieved_q,
            attempts: self.attempts,
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<LabeledGraph> {
    spec.validate()?;
    let mut last_reason = String::new();
    let mut last_q = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = RngStream::new(spec.seed, 0, attempt as u32).rng();
        match try_generate(spec, &mut rng) {
            Ok((graph, planted)) => {
                let q = modularity(&graph, &planted)?;
                if (q - spec.target_q).abs() <= Q_TOLERANCE {
                    return Ok(LabeledGraph {
                        graph,
                        planted,
                        achieved_q: q,
                        attempts: attempt + 1,
                    });
                }
                last_q = Some(q);
                last_reason = format!("achieved modularity {q:.4}");
            }
            Err(reason) => last_reason = reason,
        }
    }
    if let Some(q) = last_q {
        if last_reason.starts_with("achieved") {
            return Err(Error::Tolerance {
                target: spec.target_q,
                achieved: q,
                tolerance: Q_TOLERANCE,
            });
        }
    }
    Err(Error::Infeasible {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

type Attempt<T> = std::result::Result<T, String>;

fn power_law(lo: usize, hi: usize, exponent: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((lo..=hi).map(|k| (k as f64).powf(-exponent))).expect("non-empty support")
}

fn sample_module_sizes(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Attempt<Vec<usize>> {
    let k = spec.n_modules;
    if k == 1 {
        return Ok(vec![spec.n]);
    }
    let (lo, hi) = spec.module_size_bounds();
    let dist = power_law(lo, hi, spec.modsize_exponent);
    for _ in 0..10_000 {
        let mut sizes: Vec<usize> = (0..k - 1).map(|_| lo + dist.sample(rng)).collect();
        let used: usize = sizes.iter().sum();
        if used < spec.n && (lo..=hi).contains(&(spec.n - used)) {
            sizes.push(spec.n - used);
            return Ok(sizes);
        }
    }
    Err(format!("no module sizes in [{lo}, {hi}] sum to {}", spec.n))
}

fn sample_degrees(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Attempt<Vec<usize>> {
    let cap = spec.degree_cap();
    let dist = power_law(2, cap, spec.degree_exponent);
    let raw: Vec<f64> = (0..spec.n).map(|_| (2 + dist.sample(rng)) as f64).collect();
    let capped_mean = |c: f64| raw.iter().map(|&x| (c * x).min(cap as f64)).sum::<f64>() / spec.n as f64;
    if capped_mean(1e9) < spec.avg_degree {
        return Err(format!("degree cap {cap} cannot reach mean {}", spec.avg_degree));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while capped_mean(hi) < spec.avg_degree {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if capped_mean(mid) < spec.avg_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    let mut degrees: Vec<usize> = raw
        .iter()
        .map(|&x| {
            let v = (scale * x).min(cap as f64);
            let floor = v.floor();
            let up = rng.random::<f64>() < v - floor;
            ((floor as usize) + usize::from(up)).clamp(1, cap)
        })
        .collect();
    let target = spec.total_stubs();
    let mut sum: usize = degrees.iter().sum();
    let mut guard = 0usize;
    while sum != target {
        guard += 1;
        if guard > 100 * spec.n {
            return Err("could not match the stub total".into());
        }
        let u = rng.random_range(0..spec.n);
        if sum < target && degrees[u] < cap {
            degrees[u] += 1;
            sum += 1;
        } else if sum > target && degrees[u] > 1 {
            degrees[u] -= 1;
            sum -= 1;
        }
    }
    Ok(degrees)
}

/// Expected modularity of the planted partition when each node puts
/// `min(f d_i, s_k - 1)` stubs inside its module.
fn expected_q(f: f64, degrees: &[usize], module: &[usize], sizes: &[usize]) -> f64 {
    let k = sizes.len();
    let mut intra = vec![0.0; k];
    let mut mass = vec![0.0; k];
    for (u, &d) in degrees.iter().enumerate() {
        let c = module[u];
        intra[c] += (f * d as f64).min((sizes[c] - 1) as f64);
        mass[c] += d as f64;
    }
    let two_m: f64 = mass.iter().sum();
    let m = two_m / 2.0;
    let global: f64 = mass.iter().zip(&intra).map(|(d, i)| d - i).sum();
    (0..k)
        .map(|c| {
            let g = mass[c] - intra[c];
            let from_global = if global > 0.0 { g * g / (2.0 * global) } else { 0.0 };
            let e = intra[c] / 2.0 + from_global;
            let a = mass[c] / two_m;
            e / m - a * a
        })
        .sum()
}

fn solve_fraction(spec: &GeneratorSpec, degrees: &[usize], module: &[usize], sizes: &[usize]) -> Attempt<f64> {
    let reachable = expected_q(1.0, degrees, module, sizes);
    if reachable < spec.target_q {
        if reachable < spec.target_q - 0.2 * Q_TOLERANCE {
            return Err(format!(
                "modules can reach modularity {reachable:.4} at most, below {}",
                spec.target_q
            ));
        }
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_q(mid, degrees, module, sizes) < spec.target_q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn canon(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn pair_stubs(stubs: &mut [usize], rng: &mut ChaCha8Rng, class: usize, out: &mut Vec<(usize, usize, usize)>) {
    stubs.shuffle(rng);
    for pair in stubs.chunks_exact(2) {
        out.push((pair[0], pair[1], class));
    }
}

/// Remove self-loops and multi-edges with double-edge swaps, preferring a
/// partner from the same wiring class so within-module edges stay inside.
fn repair(edges: &mut [(usize, usize, usize)], rng: &mut ChaCha8Rng) -> Attempt<()> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
    for &(a, b, _) in edges.iter() {
        *count.entry(canon(a, b)).or_insert(0) += 1;
    }
    let mut by_class: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(_, _, c)) in edges.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let is_bad = |e: (usize, usize, usize), count: &HashMap<(usize, usize), usize>| {
        e.0 == e.1 || count[&canon(e.0, e.1)] > 1
    };
    for i in 0..edges.len() {
        let mut tries = 0usize;
        while is_bad(edges[i], &count) {
            tries += 1;
            if tries > REPAIR_TRIES_PER_EDGE {
                return Err("could not repair self-loops and multi-edges".into());
            }
            let same_class = tries <= REPAIR_TRIES_PER_EDGE / 2;
            let j = if same_class {
                let pool = &by_class[&edges[i].2];
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(0..edges.len())
            };
            if j == i {
                continue;
            }
            let (u, v, cu) = edges[i];
            let (x, y, cx) = if rng.random_bool(0.5) {
                edges[j]
            } else {
                let (x, y, c) = edges[j];
                (y, x, c)
            };
            if u == x || v == y {
                continue;
            }
            let (n1, n2) = (canon(u, x), canon(v, y));
            if n1 == n2 || count.get(&n1).copied().unwrap_or(0) > 0 || count.get(&n2).copied().unwrap_or(0) > 0 {
                continue;
            }
            for old in [canon(u, v), canon(x, y)] {
                let c = count.get_mut(&old).expect("edge counted");
                *c -= 1;
                if *c == 0 {
                    count.remove(&old);
                }
            }
            count.insert(n1, 1);
            count.insert(n2, 1);
            edges[i] = (u, x, cu);
            edges[j] = (v, y, cx);
        }
    }
    Ok(())
}

fn components_of(n: usize, edges: &[(usize, usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b, _) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).map(|u| find(&mut parent, u)).collect()
}

/// Join components with double-edge swaps between a small component and the
/// largest one, keeping degrees fixed.
fn connect(n: usize, edges: &mut [(usize, usize, usize)], module: &[usize], rng: &mut ChaCha8Rng) -> Attempt<()> {
    for _round in 0..10 * n {
        let comp = components_of(n, edges);
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for &c in &comp {
            *sizes.entry(c).or_insert(0) += 1;
        }
        if sizes.len() == 1 {
            return Ok(());
        }
        let giant = sizes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&c, _)| c)
            .expect("components exist");
        let small_edges: Vec<usize> = (0..edges.len()).filter(|&i| comp[edges[i].0] != giant).collect();
        if small_edges.is_empty() {
            return Err("isolated node cannot be connected".into());
        }
        let giant_edges: Vec<usize> = (0..edges.len()).filter(|&i| comp[edges[i].0] == giant).collect();
        let before = sizes.len();
        let mut merged = false;
        for t in 0..200 {
            let i = small_edges[rng.random_range(0..small_edges.len())];
            let (u, v, cu) = edges[i];
            let home = module[u];
            let j = if t < 100 {
                // Prefer a giant-component edge inside u's module.
                let pick = (0..20)
                    .map(|_| giant_edges[rng.random_range(0..giant_edges.len())])
                    .find(|&j| module[edges[j].0] == home && module[edges[j].1] == home);
                match pick {
                    Some(j) => j,
                    None => giant_edges[rng.random_range(0..giant_edges.len())],
                }
            } else {
                giant_edges[rng.random_range(0..giant_edges.len())]
            };
            let (x, y, cx) = edges[j];
            let (old_i, old_j) = (edges[i], edges[j]);
            edges[i] = (u, x, cu);
            edges[j] = (v, y, cx);
            let after = components_of(n, edges);
            let count = {
                let mut roots: Vec<usize> = after.clone();
                roots.sort_unstable();
                roots.dedup();
                roots.len()
            };
            if count < before {
                merged = true;
                break;
            }
            edges[i] = old_i;
            edges[j] = old_j;
        }
        if !merged {
            return Err("could not join components".into());
        }
    }
    Err("too many components".into())
}

type Layout = (Vec<usize>, Vec<usize>, Vec<usize>, f64);

/// Module sizes, degrees, node-to-module map and the within-module fraction.
fn draw_layout(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Attempt<Layout> {
    let sizes = sample_module_sizes(spec, rng)?;
    let degrees = sample_degrees(spec, rng)?;
    let mut module: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    module.shuffle(rng);
    let f = solve_fraction(spec, &degrees, &module, &sizes)?;
    Ok((sizes, degrees, module, f))
}

fn try_generate(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Attempt<(Graph, Partition)> {
    let mut draw = Err(String::new());
    for _ in 0..DRAWS_PER_ATTEMPT {
        draw = draw_layout(spec, rng);
        if draw.is_ok() {
            break;
        }
    }
    let (sizes, degrees, module, f) = draw?;
    let mut intra: Vec<usize> = degrees
        .iter()
        .enumerate()
        .map(|(u, &d)| {
            let v = (f * d as f64).min((sizes[module[u]] - 1) as f64);
            let floor = v.floor();
            let up = rng.random::<f64>() < v - floor;
            ((floor as usize) + usize::from(up)).min(d).min(sizes[module[u]] - 1)
        })
        .collect();
    // Each module needs an even number of within-module stubs.
    let k = sizes.len();
    let mut parity = vec![0usize; k];
    for (u, &s) in intra.iter().enumerate() {
        parity[module[u]] += s;
    }
    for c in 0..k {
        if parity[c] % 2 == 1 {
            let mut members: Vec<usize> = (0..spec.n).filter(|&u| module[u] == c && intra[u] > 0).collect();
            members.shuffle(rng);
            intra[members[0]] -= 1;
        }
    }

    let mut edges: Vec<(usize, usize, usize)> = Vec::with_capacity(spec.total_stubs() / 2);
    let mut module_stubs: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut global_stubs: Vec<usize> = Vec::new();
    for u in 0..spec.n {
        module_stubs[module[u]].extend(std::iter::repeat_n(u, intra[u]));
        global_stubs.extend(std::iter::repeat_n(u, degrees[u] - intra[u]));
    }
    for (c, stubs) in module_stubs.iter_mut().enumerate() {
        pair_stubs(stubs, rng, c, &mut edges);
    }
    pair_stubs(&mut global_stubs, rng, k, &mut edges);

    repair(&mut edges, rng)?;
    connect(spec.n, &mut edges, &module, rng)?;

    let (graph, report) = Graph::from_index_pairs(spec.n, edges.iter().map(|&(a, b, _)| (a, b)));
    debug_assert_eq!(report.duplicates + report.self_loops, 0);
    Ok((graph, Partition::from_labels(&module)))
}
