//! Marginal functional PCA with per-component Anderson–Darling tests.
//!
//! The pooled curves of both groups give a mean function and a covariance
//! operator on the common grid (trapezoid quadrature). Scores on the leading
//! eigenfunctions are compared between groups with a permutation
//! Anderson–Darling test, and the component p-values are adjusted by
//! Benjamini–Hochberg.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::{at_least, benjamini_hochberg, check_permutations, p_value};
use crate::pipeline::{check_pair, CurveSample};
use crate::rng::{derive_seed, RngStream};

pub const DEFAULT_PVE: f64 = 0.95;

/// Trapezoid quadrature weights; a single point gets weight 1.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let t = grid.len();
    if t == 1 {
        return vec![1.0];
    }
    (0..t)
        .map(|j| {
            let left = if j > 0 { grid[j] - grid[j - 1] } else { 0.0 };
            let right = if j + 1 < t { grid[j + 1] - grid[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaBasis {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    /// All eigenvalues, non-increasing and clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// First `k` eigenfunctions, orthonormal under the weighted inner product.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub k: usize,
    pub pve: f64,
    /// Mean diagonal excess of the covariance over its rank-`k` part.
    pub noise_variance: f64,
}

impl FpcaBasis {
    pub fn scores(&self, curve: &[f64]) -> Vec<f64> {
        self.eigenfunctions
            .iter()
            .map(|phi| {
                curve
                    .iter()
                    .zip(&self.mean)
                    .zip(phi.iter().zip(&self.weights))
                    .map(|((y, mu), (f, w))| (y - mu) * f * w)
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (xi, phi) in scores.iter().zip(&self.eigenfunctions) {
            for (o, f) in out.iter_mut().zip(phi) {
                *o += xi * f;
            }
        }
        out
    }

    pub fn explained(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.k].iter().sum::<f64>() / total
    }
}

/// Pooled sample covariance (divisor `N − 1`) on the grid.
pub fn pooled_covariance(curves: &[&[f64]]) -> (Vec<f64>, DMatrix<f64>) {
    let n = curves.len();
    let t = curves[0].len();
    let mut mean = vec![0.0; t];
    for c in curves {
        for (m, v) in mean.iter_mut().zip(c.iter()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = DMatrix::zeros(t, t);
    for c in curves {
        for i in 0..t {
            let di = c[i] - mean[i];
            for j in 0..t {
                cov[(i, j)] += di * (c[j] - mean[j]);
            }
        }
    }
    cov /= (n - 1) as f64;
    (mean, cov)
}

pub fn marginal_fpca(a: &CurveSample, b: &CurveSample, pve: f64) -> Result<FpcaBasis> {
    if a.grid != b.grid {
        return Err(Error::Dimension("curve samples use different grids".into()));
    }
    if a.len() + b.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} curves; marginal FPCA needs at least 4",
            a.len() + b.len()
        )));
    }
    if !(pve > 0.0 && pve <= 1.0) {
        return Err(Error::InvalidInput(format!("PVE {pve} must lie in (0, 1]")));
    }
    let pooled: Vec<&[f64]> = a.curves.iter().chain(&b.curves).map(Vec::as_slice).collect();
    let (mean, cov) = pooled_covariance(&pooled);
    let weights = trapezoid_weights(&a.grid);
    let t = weights.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(t, t, |i, j| sw[i] * cov[(i, j)] * sw[j]);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let total: f64 = eigenvalues.iter().sum();
    let k = if total == 0.0 {
        1
    } else {
        let mut acc = 0.0;
        let mut k = t;
        for (i, l) in eigenvalues.iter().enumerate() {
            acc += l;
            if acc / total >= pve - 1e-12 {
                k = i + 1;
                break;
            }
        }
        k
    };

    let eigenfunctions: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&c| {
            let mut phi: Vec<f64> = (0..t).map(|i| eig.eigenvectors[(i, c)] / sw[i]).collect();
            // Sign convention: the entry of largest magnitude is positive.
            let pivot = phi
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() + 1e-12 { v } else { best });
            if pivot < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            phi
        })
        .collect();

    let noise_variance = (0..t)
        .map(|i| {
            let fitted: f64 = eigenfunctions
                .iter()
                .zip(&eigenvalues)
                .map(|(phi, l)| l * phi[i] * phi[i])
                .sum();
            (cov[(i, i)] - fitted).max(0.0)
        })
        .sum::<f64>()
        / t as f64;

    Ok(FpcaBasis {
        grid: a.grid.clone(),
        weights,
        mean,
        eigenvalues,
        eigenfunctions,
        k,
        pve,
        noise_variance,
    })
}

/// Pooled values in sorted order with their tie blocks, reused across
/// label permutations.
struct RankedPool {
    /// `(start, len)` of each block of equal values in sorted order.
    blocks: Vec<(usize, usize)>,
    /// Group of the value at each sorted position (`true` = first sample).
    labels: Vec<bool>,
    n1: usize,
}

impl RankedPool {
    fn new(a: &[f64], b: &[f64]) -> RankedPool {
        let mut tagged: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
        tagged.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)));
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < tagged.len() {
            let mut end = start + 1;
            while end < tagged.len() && tagged[end].0 == tagged[start].0 {
                end += 1;
            }
            blocks.push((start, end - start));
            start = end;
        }
        RankedPool {
            blocks,
            labels: tagged.iter().map(|t| t.1).collect(),
            n1: a.len(),
        }
    }

    fn degenerate(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Midrank two-sample Anderson–Darling statistic `A²_akN`.
    fn statistic(&self, labels: &[bool]) -> f64 {
        let n = labels.len() as f64;
        let sizes = [self.n1 as f64, n - self.n1 as f64];
        let mut m1 = 0usize;
        let mut total = 0.0;
        for &(start, len) in &self.blocks {
            let f1 = labels[start..start + len].iter().filter(|&&l| l).count();
            m1 += f1;
            let lj = len as f64;
            let bj = start as f64 + lj / 2.0;
            let denom = bj * (n - bj) - n * lj / 4.0;
            if denom <= 0.0 {
                continue;
            }
            let below = (start + len) as f64;
            let ma = [m1 as f64 - f1 as f64 / 2.0, below - m1 as f64 - (len - f1) as f64 / 2.0];
            for i in 0..2 {
                let d = n * ma[i] - bj * sizes[i];
                total += lj / n * d * d / denom / sizes[i];
            }
        }
        total * (n - 1.0) / n
    }
}

/// Midrank two-sample Anderson–Darling statistic.
pub fn ad_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pool = RankedPool::new(a, b);
    pool.statistic(&pool.labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Permutation Anderson–Darling test.
pub fn ad_two_sample(a: &[f64], b: &[f64], n_perm: usize, stream: RngStream) -> Result<AdOutcome> {
    check_permutations(n_perm)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "samples of {} and {}; each needs at least 2",
            a.len(),
            b.len()
        )));
    }
    let pool = RankedPool::new(a, b);
    let observed = pool.statistic(&pool.labels);
    if pool.degenerate() {
        return Ok(AdOutcome {
            statistic: observed,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let mut rng = stream.rng();
    let mut labels = pool.labels.clone();
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        labels.shuffle(&mut rng);
        if at_least(pool.statistic(&labels), observed) {
            exceed += 1;
        }
    }
    Ok(AdOutcome {
        statistic: observed,
        p_value: p_value(exceed, n_perm),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub raw_p: Vec<f64>,
    pub bh_adjusted: Vec<f64>,
    pub bonferroni_reject: bool,
    pub fdr_reject: bool,
    pub min_adjusted_p: f64,
    pub alpha: f64,
    pub eigenvalues: Vec<f64>,
    pub explained: f64,
    pub noise_variance: f64,
}

pub fn fpca_test(
    observed: &CurveSample,
    null_sample: &CurveSample,
    pve: f64,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<FpcaReport> {
    check_pair(observed, null_sample)?;
    check_permutations(n_perm)?;
    let basis = marginal_fpca(observed, null_sample, pve)?;
    let s1: Vec<Vec<f64>> = observed.curves.iter().map(|c| basis.scores(c)).collect();
    let s2: Vec<Vec<f64>> = null_sample.curves.iter().map(|c| basis.scores(c)).collect();
    let ad_seed = derive_seed(seed, "fpca/ad");
    let raw_p: Vec<f64> = (0..basis.k)
        .into_par_iter()
        .map(|k| {
            let a: Vec<f64> = s1.iter().map(|s| s[k]).collect();
            let b: Vec<f64> = s2.iter().map(|s| s[k]).collect();
            ad_two_sample(&a, &b, n_perm, RngStream::new(ad_seed, 0, k as u32)).map(|o| o.p_value)
        })
        .collect::<Result<_>>()?;
    let bh_adjusted = benjamini_hochberg(&raw_p);
    let min_adjusted_p = bh_adjusted.iter().copied().fold(1.0, f64::min);
    let min_raw = raw_p.iter().copied().fold(1.0, f64::min);
    Ok(FpcaReport {
        k: basis.k,
        bonferroni_reject: min_raw <= alpha / basis.k as f64,
        fdr_reject: min_adjusted_p <= alpha,
        min_adjusted_p,
        raw_p,
        bh_adjusted,
        alpha,
        explained: basis.explained(),
        eigenvalues: basis.eigenvalues,
        noise_variance: basis.noise_variance,
    })
}
