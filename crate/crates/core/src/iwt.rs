//! Interval-wise testing of two curve families.
//!
//! Curves are expanded on a basis, every contiguous interval of components
//! and every interval complement is tested by a synchronised permutation
//! test, and the adjusted p-value of component `k` is the largest raw
//! p-value among the tested sets that contain `k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::permutation::{at_least, check_permutations, p_value, permutation_sequence};
use crate::pipeline::{check_pair, CurveSample};
use crate::rng::{derive_seed, RngStream};

pub const DEFAULT_PERMUTATIONS: usize = 1000;
const SPLINE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Pointwise,
    Bspline,
}

impl FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pointwise" => Ok(Basis::Pointwise),
            "bspline" | "b-spline" => Ok(Basis::Bspline),
            _ => Err(Error::InvalidInput(format!("unknown basis `{s}`"))),
        }
    }
}

/// How component statistics combine into an interval statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Sum,
    Max,
}

impl FromStr for Combine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Combine::Sum),
            "max" => Ok(Combine::Max),
            _ => Err(Error::InvalidInput(format!("unknown combining function `{s}`"))),
        }
    }
}

/// Basis coefficients, one row per curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMatrix {
    pub coefficients: Vec<Vec<f64>>,
    pub components: usize,
}

/// Knot vector of the interpolating spline: order `min(4, T)`, clamped at
/// both ends, interior knots at the grid levels except the two next to each
/// end. This gives exactly `T` basis functions.
pub fn spline_knots(grid: &[f64]) -> (usize, Vec<f64>) {
    let t = grid.len();
    let order = SPLINE_ORDER.min(t);
    let mut knots = vec![grid[0]; order];
    if t > order {
        knots.extend_from_slice(&grid[2..t - 2]);
    }
    knots.extend(std::iter::repeat_n(grid[t - 1], order));
    (order, knots)
}

/// Values of all B-splines of the given order at `x` (Cox–de Boor).
pub fn bspline_values(knots: &[f64], order: usize, x: f64) -> Vec<f64> {
    let nb = knots.len() - order;
    let last = knots[knots.len() - 1];
    if knots[0] == last {
        // A single grid point: the constant function.
        return vec![1.0; nb];
    }
    // Span index with the right end folded into the last non-empty span.
    let mut span = if x >= last {
        (0..knots.len() - 1).rev().find(|&i| knots[i] < knots[i + 1]).unwrap()
    } else {
        (0..knots.len() - 1).find(|&i| knots[i] <= x && x < knots[i + 1]).unwrap()
    };
    span = span.min(knots.len() - 2);
    let mut b = vec![0.0; knots.len() - 1];
    b[span] = 1.0;
    for k in 2..=order {
        let mut next = vec![0.0; knots.len() - k];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut v = 0.0;
            let d1 = knots[i + k - 1] - knots[i];
            if d1 > 0.0 {
                v += (x - knots[i]) / d1 * b[i];
            }
            let d2 = knots[i + k] - knots[i + 1];
            if d2 > 0.0 {
                v += (knots[i + k] - x) / d2 * b[i + 1];
            }
            *slot = v;
        }
        b = next;
    }
    b.truncate(nb);
    b
}

/// Interpolation matrix `B[i][j] = B_j(t_i)`.
pub fn spline_design(grid: &[f64]) -> DMatrix<f64> {
    let (order, knots) = spline_knots(grid);
    let t = grid.len();
    let mut m = DMatrix::zeros(t, t);
    for (i, &x) in grid.iter().enumerate() {
        for (j, v) in bspline_values(&knots, order, x).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

pub fn basis_expand(a: &CurveSample, b: &CurveSample, basis: Basis) -> Result<(ComponentMatrix, ComponentMatrix)> {
    if a.grid != b.grid {
        return Err(Error::Dimension("curve samples use different grids".into()));
    }
    let t = a.grid.len();
    if t == 0 {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    match basis {
        Basis::Pointwise => Ok((
            ComponentMatrix {
                coefficients: a.curves.clone(),
                components: t,
            },
            ComponentMatrix {
                coefficients: b.curves.clone(),
                components: t,
            },
        )),
        Basis::Bspline => {
            let lu = spline_design(&a.grid).lu();
            let solve = |s: &CurveSample| -> Result<ComponentMatrix> {
                let coefficients = s
                    .curves
                    .iter()
                    .map(|c| {
                        lu.solve(&DVector::from_column_slice(c))
                            .map(|v| v.iter().copied().collect())
                            .ok_or_else(|| Error::Numerical("singular spline interpolation matrix".into()))
                    })
                    .collect::<Result<_>>()?;
                Ok(ComponentMatrix {
                    coefficients,
                    components: t,
                })
            };
            Ok((solve(a)?, solve(b)?))
        }
    }
}

/// Contiguous component range `start..=end` or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub start: usize,
    pub end: usize,
    pub complement: bool,
}

impl IntervalSet {
    pub fn contains(&self, k: usize) -> bool {
        (self.start..=self.end).contains(&k) != self.complement
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub components: usize,
    pub sets: Vec<IntervalSet>,
    pub p_values: Vec<f64>,
}

/// Intervals in order `(0,0), (0,1), …, (1,1), …` followed by the
/// complements of all intervals except the full range.
fn enumerate_sets(p: usize) -> Vec<IntervalSet> {
    let mut sets = Vec::with_capacity(p * (p + 1));
    for complement in [false, true] {
        for start in 0..p {
            for end in start..p {
                if complement && start == 0 && end == p - 1 {
                    continue;
                }
                sets.push(IntervalSet { start, end, complement });
            }
        }
    }
    sets
}

/// Squared group-mean difference per component. `order[i]` is the row at
/// position `i`; the first `n1` positions are group one.
pub fn component_statistics(rows: &[&[f64]], order: &[usize], n1: usize, active: &[bool]) -> Vec<f64> {
    let p = active.len();
    let n2 = order.len() - n1;
    let mut out = vec![0.0; p];
    for k in 0..p {
        if !active[k] {
            continue;
        }
        let mut s1 = 0.0;
        for &i in &order[..n1] {
            s1 += rows[i][k];
        }
        let mut s2 = 0.0;
        for &i in &order[n1..] {
            s2 += rows[i][k];
        }
        let d = s1 / n1 as f64 - s2 / n2 as f64;
        out[k] = d * d;
    }
    out
}

fn set_statistics(t: &[f64], combine: Combine, out: &mut Vec<f64>) {
    let p = t.len();
    out.clear();
    match combine {
        Combine::Sum => {
            let mut prefix = vec![0.0; p + 1];
            for k in 0..p {
                prefix[k + 1] = prefix[k] + t[k];
            }
            let mut suffix = vec![0.0; p + 1];
            for k in (0..p).rev() {
                suffix[k] = suffix[k + 1] + t[k];
            }
            for start in 0..p {
                let mut s = 0.0;
                for &v in &t[start..] {
                    s += v;
                    out.push(s);
                }
            }
            for start in 0..p {
                for end in start..p {
                    if start == 0 && end == p - 1 {
                        continue;
                    }
                    out.push(prefix[start] + suffix[end + 1]);
                }
            }
        }
        Combine::Max => {
            let mut prefix = vec![0.0f64; p + 1];
            for k in 0..p {
                prefix[k + 1] = prefix[k].max(t[k]);
            }
            let mut suffix = vec![0.0f64; p + 1];
            for k in (0..p).rev() {
                suffix[k] = suffix[k + 1].max(t[k]);
            }
            for start in 0..p {
                let mut s = 0.0f64;
                for &v in &t[start..] {
                    s = s.max(v);
                    out.push(s);
                }
            }
            for start in 0..p {
                for end in start..p {
                    if start == 0 && end == p - 1 {
                        continue;
                    }
                    out.push(prefix[start].max(suffix[end + 1]));
                }
            }
        }
    }
}

/// Components with zero variance inside both groups carry no evidence and
/// are left out of every statistic.
fn active_components(a: &ComponentMatrix, b: &ComponentMatrix) -> Vec<bool> {
    let constant = |m: &ComponentMatrix, k: usize| m.coefficients.iter().all(|r| r[k] == m.coefficients[0][k]);
    (0..a.components).map(|k| !(constant(a, k) && constant(b, k))).collect()
}

pub fn interval_tests(
    a: &ComponentMatrix,
    b: &ComponentMatrix,
    n_perm: usize,
    stream: RngStream,
    combine: Combine,
) -> Result<RawTable> {
    check_permutations(n_perm)?;
    if a.components != b.components || a.components == 0 {
        return Err(Error::Dimension("groups need the same positive component count".into()));
    }
    if a.coefficients.len() < 2 || b.coefficients.len() < 2 {
        return Err(Error::InsufficientData("each group needs at least 2 curves".into()));
    }
    let p = a.components;
    let rows: Vec<&[f64]> = a.coefficients.iter().chain(&b.coefficients).map(Vec::as_slice).collect();
    let n1 = a.coefficients.len();
    let active = active_components(a, b);
    let identity: Vec<usize> = (0..rows.len()).collect();

    let mut observed = Vec::new();
    set_statistics(&component_statistics(&rows, &identity, n1, &active), combine, &mut observed);
    let mut exceed = vec![0usize; observed.len()];
    let mut permuted = Vec::with_capacity(observed.len());
    for order in permutation_sequence(rows.len(), n_perm, stream) {
        set_statistics(&component_statistics(&rows, &order, n1, &active), combine, &mut permuted);
        for ((e, &s), &o) in exceed.iter_mut().zip(&permuted).zip(&observed) {
            if at_least(s, o) {
                *e += 1;
            }
        }
    }
    Ok(RawTable {
        components: p,
        sets: enumerate_sets(p),
        p_values: exceed.into_iter().map(|e| p_value(e, n_perm)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IWTResult {
    pub components: usize,
    pub adjusted_p: Vec<f64>,
    pub sig_05_mask: Vec<bool>,
    pub sig_01_mask: Vec<bool>,
    pub raw: RawTable,
}

impl IWTResult {
    pub fn significant_fraction(&self, alpha: f64, skip_first: bool) -> f64 {
        let from = usize::from(skip_first).min(self.components);
        let slice = &self.adjusted_p[from..];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().filter(|&&p| p <= alpha).count() as f64 / slice.len() as f64
    }
}

pub fn adjust(raw: RawTable) -> IWTResult {
    let adjusted_p: Vec<f64> = (0..raw.components)
        .map(|k| {
            raw.sets
                .iter()
                .zip(&raw.p_values)
                .filter(|(s, _)| s.contains(k))
                .map(|(_, &p)| p)
                .fold(0.0, f64::max)
        })
        .collect();
    IWTResult {
        components: raw.components,
        sig_05_mask: adjusted_p.iter().map(|&p| p <= 0.05).collect(),
        sig_01_mask: adjusted_p.iter().map(|&p| p <= 0.01).collect(),
        adjusted_p,
        raw,
    }
}

pub fn iwt_test(
    observed: &CurveSample,
    null_sample: &CurveSample,
    n_perm: usize,
    seed: u64,
    basis: Basis,
    combine: Combine,
) -> Result<IWTResult> {
    check_pair(observed, null_sample)?;
    let (a, b) = basis_expand(observed, null_sample, basis)?;
    let raw = interval_tests(&a, &b, n_perm, RngStream::root(derive_seed(seed, "iwt/permutations")), combine)?;
    Ok(adjust(raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_enumeration_counts() {
        let sets = enumerate_sets(4);
        assert_eq!(sets.len(), 10 + 9);
        assert!(sets[..10].iter().all(|s| !s.complement));
        let full = IntervalSet { start: 0, end: 3, complement: false };
        assert!((0..4).all(|k| full.contains(k)));
        let c = IntervalSet { start: 1, end: 2, complement: true };
        assert_eq!((0..4).map(|k| c.contains(k)).collect::<Vec<_>>(), vec![true, false, false, true]);
    }

    #[test]
    fn spline_partition_of_unity() {
        for t in 1..8 {
            let grid: Vec<f64> = (0..t).map(|i| (i as f64 / 7.0).powf(1.3)).collect();
            let m = spline_design(&grid);
            for i in 0..t {
                let s: f64 = m.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "t={t} row {i} sums to {s}");
            }
        }
    }

    #[test]
    fn adjust_all_ones() {
        let sets = enumerate_sets(3);
        let raw = RawTable {
            components: 3,
            p_values: vec![1.0; sets.len()],
            sets,
        };
        assert_eq!(adjust(raw).adjusted_p, vec![1.0; 3]);
    }

    #[test]
    fn rejects_few_permutations() {
        let m = ComponentMatrix {
            coefficients: vec![vec![1.0], vec![2.0]],
            components: 1,
        };
        assert!(interval_tests(&m, &m, 10, RngStream::root(0), Combine::Sum).is_err());
    }
}
