//! Independent reference implementations used by the integration tests.
//! Everything here is written for clarity, not speed.
#![allow(dead_code)]

use std::collections::HashMap;

use commrobust::{Graph, Partition};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_index_pairs(n, edges.iter().copied()).0
}

pub fn clique_edges(nodes: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    let v: Vec<usize> = nodes.collect();
    let mut e = Vec::new();
    for (i, &a) in v.iter().enumerate() {
        for &b in &v[i + 1..] {
            e.push((a, b));
        }
    }
    e
}

/// Two cliques of size `k` joined by one bridge edge.
pub fn two_cliques(k: usize) -> Graph {
    let mut e = clique_edges(0..k);
    e.extend(clique_edges(k..2 * k));
    e.push((k - 1, k));
    graph(2 * k, &e)
}

pub fn erdos_renyi(n: usize, p: f64, r: &mut impl Rng) -> Graph {
    let mut e = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.random::<f64>() < p {
                e.push((a, b));
            }
        }
    }
    graph(n, &e)
}

pub fn random_connected(n: usize, p: f64, r: &mut impl Rng) -> Graph {
    loop {
        let g = erdos_renyi(n, p, r);
        if g.edge_count() > 0 && g.is_connected() {
            return g;
        }
    }
}

pub fn random_labels(n: usize, k: usize, r: &mut impl Rng) -> Partition {
    let raw: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    Partition::from_labels(&raw)
}

/// Entropy of a label vector straight from the definition.
pub fn entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    -counts.values().map(|&c| c / n * (c / n).ln()).sum::<f64>()
}

/// VI as `H(C) + H(C') − 2 I(C, C')` from joint label frequencies.
pub fn vi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
    }
    let mi: f64 = joint.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    entropy(a) + entropy(b) - 2.0 * mi
}

/// Modularity by the double sum over all ordered node pairs.
pub fn modularity(g: &Graph, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let two_m = 2.0 * g.edge_count() as f64;
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] != labels[j] {
                continue;
            }
            let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            q += a - (g.degree(i) * g.degree(j)) as f64 / two_m;
        }
    }
    q / two_m
}

/// Calls `f` with every set partition of `0..n` as a restricted growth string.
pub fn for_each_set_partition(n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, n: usize, f: &mut impl FnMut(&[usize])) {
        if i == n {
            f(cur);
            return;
        }
        for l in 0..=max + 1 {
            cur.push(l);
            rec(i + 1, max.max(l), cur, n, f);
            cur.pop();
        }
    }
    if n == 0 {
        return;
    }
    let mut cur = vec![0];
    rec(1, 0, &mut cur, n, f);
}

/// Exhaustive maximum modularity over all set partitions.
pub fn max_modularity(g: &Graph) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for_each_set_partition(g.node_count(), &mut |labels: &[usize]| {
        best = best.max(modularity(g, labels));
    });
    best
}

/// Dense GP log marginal likelihood via an LU factorisation.
pub fn gp_lml(x: &[f64], y: &[f64], sf2: f64, ell: f64, sn2: f64) -> f64 {
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d = x[i] - x[j];
        sf2 * (-0.5 * d * d / (ell * ell)).exp() + if i == j { sn2 } else { 0.0 }
    });
    let lu = k.clone().lu();
    let yv = nalgebra::DVector::from_column_slice(y);
    let alpha = lu.solve(&yv).expect("nonsingular");
    let logdet = lu.determinant().ln();
    -0.5 * yv.dot(&alpha) - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Midrank two-sample Anderson–Darling statistic from the textbook sums
/// over distinct pooled values.
pub fn ad_midrank(a: &[f64], b: &[f64]) -> f64 {
    let mut z: Vec<f64> = a.iter().chain(b).copied().collect();
    z.sort_by(f64::total_cmp);
    let mut distinct = z.clone();
    distinct.dedup();
    let n = z.len() as f64;
    let mut total = 0.0;
    for (sample, ni) in [(a, a.len() as f64), (b, b.len() as f64)] {
        let mut inner = 0.0;
        for &zj in &distinct {
            let lj = z.iter().filter(|&&v| v == zj).count() as f64;
            let fij = sample.iter().filter(|&&v| v == zj).count() as f64;
            let mij = sample.iter().filter(|&&v| v < zj).count() as f64 + fij / 2.0;
            let bj = z.iter().filter(|&&v| v < zj).count() as f64 + lj / 2.0;
            let denom = bj * (n - bj) - n * lj / 4.0;
            if denom > 0.0 {
                inner += lj / n * (n * mij - bj * ni).powi(2) / denom;
            }
        }
        total += inner / ni;
    }
    total * (n - 1.0) / n
}

/// Two-sample permutation test on the squared mean difference, driven by an
/// explicit permutation list (`perm[i]` is the value at position `i`).
pub fn scalar_permutation_test(values: &[f64], n1: usize, perms: &[Vec<usize>]) -> f64 {
    let stat = |order: &[usize]| {
        let m1: f64 = order[..n1].iter().map(|&i| values[i]).sum::<f64>() / n1 as f64;
        let m2: f64 = order[n1..].iter().map(|&i| values[i]).sum::<f64>() / (values.len() - n1) as f64;
        (m1 - m2) * (m1 - m2)
    };
    let identity: Vec<usize> = (0..values.len()).collect();
    let observed = stat(&identity);
    let exceed = perms
        .iter()
        .filter(|p| {
            let s = stat(p);
            s >= observed - 1e-10 * observed
        })
        .count();
    (1 + exceed) as f64 / (perms.len() + 1) as f64
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn normal(r: &mut impl Rng) -> f64 {
    rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, r)
}
