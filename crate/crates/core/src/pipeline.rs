//! Observed and null VI-vs-perturbation curves.
//!
//! For every level `p` and primary replicate `r` the base graph is rewired
//! by `p`; each of those graphs is rewired again by 1% `n_secondary` times
//! and clustered. Each cell holds `VI(C, C')` against the partition `C` of the
//! unperturbed base graph.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{detect, DetectorChoice};
use crate::compare::variation_of_information;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rewire::{null_graph, rewire, NullMethod, PerturbationLevel};
use crate::rng::{derive_seed, RngStream};

/// Perturbation applied to each primary replicate to obtain secondaries.
pub const SECONDARY_LEVEL: f64 = 0.01;
/// Largest tolerated fraction of missing cells per curve.
pub const MAX_MISSING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGrid {
    pub levels: Vec<f64>,
    pub n_primary: usize,
    pub n_secondary: usize,
}

impl Default for CurveGrid {
    fn default() -> Self {
        CurveGrid::equispaced(20, 10, 10)
    }
}

impl CurveGrid {
    /// Level 0 followed by `n_levels` equispaced levels ending at 1.
    pub fn equispaced(n_levels: usize, n_primary: usize, n_secondary: usize) -> Self {
        let levels = std::iter::once(0.0)
            .chain((1..=n_levels).map(|i| i as f64 / n_levels as f64))
            .collect();
        CurveGrid {
            levels,
            n_primary,
            n_secondary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.first() != Some(&0.0) {
            return Err(Error::InvalidInput("grid must start at level 0".into()));
        }
        if self.levels.windows(2).any(|w| !(w[0] < w[1])) || self.levels.last().is_some_and(|&p| p > 1.0) {
            return Err(Error::InvalidInput(
                "levels must be strictly increasing within [0, 1]".into(),
            ));
        }
        if self.n_primary == 0 || self.n_secondary == 0 {
            return Err(Error::InvalidInput("replicate counts must be positive".into()));
        }
        Ok(())
    }

    pub fn replicates(&self) -> usize {
        self.n_primary * self.n_secondary
    }
}

/// Which of the two curves a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Observed,
    Null,
}

impl Which {
    pub fn as_str(&self) -> &'static str {
        match self {
            Which::Observed => "observed",
            Which::Null => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingCell {
    pub which: Which,
    pub level: usize,
    pub rep: usize,
}

/// `levels × replicates` matrix; `None` marks a cell lost to rewire saturation.
pub type CurveMatrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VICurveSet {
    pub grid: CurveGrid,
    pub method: DetectorChoice,
    pub master_seed: u64,
    pub n_nodes: usize,
    pub vic: CurveMatrix,
    pub vic_random: CurveMatrix,
    pub missing: Vec<MissingCell>,
    pub null_method: NullMethod,
    #[serde(default = "one")]
    pub null_draws: usize,
}

fn one() -> usize {
    1
}

impl VICurveSet {
    pub fn matrix(&self, which: Which) -> &CurveMatrix {
        match which {
            Which::Observed => &self.vic,
            Which::Null => &self.vic_random,
        }
    }

    /// Mean VI per level over the present cells.
    pub fn level_means(&self, which: Which) -> Vec<f64> {
        self.matrix(which)
            .iter()
            .map(|row| {
                let present: Vec<f64> = row.iter().flatten().copied().collect();
                present.iter().sum::<f64>() / present.len().max(1) as f64
            })
            .collect()
    }

    /// `(level, vi)` pairs of all present cells.
    pub fn observations(&self, which: Which) -> Vec<(f64, f64)> {
        self.matrix(which)
            .iter()
            .zip(&self.grid.levels)
            .flat_map(|(row, &p)| row.iter().flatten().map(move |&v| (p, v)))
            .collect()
    }

    /// Replicate columns as curves over the levels; curves with a missing
    /// cell are dropped.
    pub fn curves(&self, which: Which) -> Vec<Vec<f64>> {
        let m = self.matrix(which);
        (0..self.grid.replicates())
            .filter_map(|c| m.iter().map(|row| row[c]).collect::<Option<Vec<f64>>>())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: VICurveSet = serde_json::from_str(s)?;
        set.grid.validate()?;
        let rows = set.grid.levels.len();
        let cols = set.grid.replicates();
        for m in [&set.vic, &set.vic_random] {
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(Error::Dimension(format!(
                    "curve matrix does not match the {rows} × {cols} grid"
                )));
            }
        }
        Ok(set)
    }

    /// One line per cell: `level,rep,which,vi` with an empty `vi` for
    /// missing cells.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,rep,which,vi")?;
        for which in [Which::Observed, Which::Null] {
            for (row, &p) in self.matrix(which).iter().zip(&self.grid.levels) {
                for (rep, v) in row.iter().enumerate() {
                    match v {
                        Some(v) => writeln!(out, "{p},{rep},{},{v}", which.as_str())?,
                        None => writeln!(out, "{p},{rep},{},", which.as_str())?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Curves sampled on a shared level grid, one per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

impl CurveSample {
    pub fn new(grid: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(c) = curves.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Dimension(format!(
                "curve has {} values on a {}-point grid",
                c.len(),
                grid.len()
            )));
        }
        Ok(CurveSample { grid, curves })
    }

    /// Complete replicate columns of one curve family.
    pub fn from_set(set: &VICurveSet, which: Which) -> Self {
        CurveSample {
            grid: set.grid.levels.clone(),
            curves: set.curves(which),
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Check that two samples can be compared: same grid, at least two curves each.
pub(crate) fn check_pair(a: &CurveSample, b: &CurveSample) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Dimension("curve samples use different grids".into()));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "groups of {} and {} curves; each needs at least 2",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn purpose(tag: &str, which: Which) -> String {
    format!("{}/{tag}", which.as_str())
}

/// Partition of the unperturbed base graph that every cell is compared to.
pub fn reference_partition(g: &Graph, method: DetectorChoice, seed: u64, which: Which) -> Partition {
    detect(g, method, derive_seed(seed, &purpose("reference", which)))
}

fn cell_seed(seed: u64, which: Which, level: usize, col: usize) -> u64 {
    derive_seed(seed, &format!("{}/detect/{level}/{col}", which.as_str()))
}

fn base_tag(tag: &str, which: Which, draw: usize) -> String {
    if draw == 0 {
        purpose(tag, which)
    } else {
        format!("{}/{draw}", purpose(tag, which))
    }
}

/// VI matrix over one or more base graphs; primary replicate `r` perturbs
/// base `r mod bases.len()`. Level-0 cells are zero by definition.
fn build_curve(bases: &[&Graph], method: DetectorChoice, grid: &CurveGrid, seed: u64, which: Which) -> Result<(CurveMatrix, usize)> {
    grid.validate()?;
    if bases.iter().any(|g| g.edge_count() == 0) {
        return Err(Error::InvalidInput("curve needs a graph with at least one edge".into()));
    }
    let references: Vec<Partition> = bases
        .iter()
        .enumerate()
        .map(|(d, g)| detect(g, method, derive_seed(seed, &base_tag("reference", which, d))))
        .collect();
    let primary_seed = derive_seed(seed, &purpose("primary", which));
    let secondary_seed = derive_seed(seed, &purpose("secondary", which));
    let secondary = PerturbationLevel::new(SECONDARY_LEVEL)?;
    let ns = grid.n_secondary;

    let jobs: Vec<(usize, usize)> = (1..grid.levels.len())
        .flat_map(|l| (0..grid.n_primary).map(move |r| (l, r)))
        .collect();
    let blocks: Vec<Result<Vec<Option<f64>>>> = jobs
        .par_iter()
        .map(|&(l, r)| {
            let d = r % bases.len();
            let p = PerturbationLevel::new(grid.levels[l])?;
            let perturbed = match rewire(bases[d], p, RngStream::new(primary_seed, l as u32, r as u32)) {
                Ok(h) => h,
                Err(Error::Saturation { .. }) => return Ok(vec![None; ns]),
                Err(e) => return Err(e),
            };
            (0..ns)
                .map(|s| {
                    let col = r * ns + s;
                    let stream = RngStream::new(secondary_seed, l as u32, col as u32);
                    match rewire(&perturbed, secondary, stream) {
                        Ok(h) => {
                            let c = detect(&h, method, cell_seed(seed, which, l, col));
                            Ok(Some(variation_of_information(&references[d], &c)?))
                        }
                        Err(Error::Saturation { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })
        .collect();

    let mut matrix: CurveMatrix = vec![vec![Some(0.0); grid.replicates()]; grid.levels.len()];
    let mut missing = 0usize;
    for (&(l, r), block) in jobs.iter().zip(blocks) {
        for (s, v) in block?.into_iter().enumerate() {
            missing += usize::from(v.is_none());
            matrix[l][r * ns + s] = v;
        }
    }
    let total = (grid.levels.len() - 1) * grid.replicates();
    if missing as f64 > MAX_MISSING_FRACTION * total as f64 {
        return Err(Error::TooManyMissing { missing, total });
    }
    if missing > 0 {
        log::warn!("{} curve: {missing} of {total} cells missing", which.as_str());
    }
    Ok((matrix, missing))
}

pub fn build_observed_curve(g: &Graph, method: DetectorChoice, grid: &CurveGrid, seed: u64) -> Result<CurveMatrix> {
    Ok(build_curve(&[g], method, grid, seed, Which::Observed)?.0)
}

/// First null base graph used by [`build_null_curve`] and [`run_pipeline`].
pub fn null_base(g: &Graph, seed: u64) -> Result<(Graph, NullMethod)> {
    null_base_draw(g, seed, 0)
}

fn null_base_draw(g: &Graph, seed: u64, draw: usize) -> Result<(Graph, NullMethod)> {
    let tag = if draw == 0 { "null/base".to_string() } else { format!("null/base/{draw}") };
    null_graph(g, RngStream::root(derive_seed(seed, &tag)), true)
}

/// `draws` independent null base graphs; the method is `EdgeSwap` if any draw
/// needed the fallback.
fn null_bases(g: &Graph, seed: u64, draws: usize) -> Result<(Vec<Graph>, NullMethod)> {
    let mut method = NullMethod::Rejection;
    let mut bases = Vec::with_capacity(draws);
    for d in 0..draws {
        let (b, m) = null_base_draw(g, seed, d)?;
        if m == NullMethod::EdgeSwap {
            method = m;
        }
        bases.push(b);
    }
    Ok((bases, method))
}

pub fn build_null_curve(g: &Graph, method: DetectorChoice, grid: &CurveGrid, seed: u64) -> Result<CurveMatrix> {
    let (base, _) = null_base(g, seed)?;
    Ok(build_curve(&[&base], method, grid, seed, Which::Null)?.0)
}

fn missing_cells(m: &CurveMatrix, which: Which) -> Vec<MissingCell> {
    m.iter()
        .enumerate()
        .flat_map(|(level, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| v.is_none())
                .map(move |(rep, _)| MissingCell { which, level, rep })
        })
        .collect()
}

pub fn run_pipeline(g: &Graph, method: DetectorChoice, grid: &CurveGrid, seed: u64) -> Result<VICurveSet> {
    run_pipeline_with_draws(g, method, grid, seed, 1)
}

/// [`run_pipeline`] with the null curve spread over `null_draws` independent
/// null base graphs (primary replicate `r` uses draw `r mod null_draws`).
pub fn run_pipeline_with_draws(
    g: &Graph,
    method: DetectorChoice,
    grid: &CurveGrid,
    seed: u64,
    null_draws: usize,
) -> Result<VICurveSet> {
    if null_draws == 0 || null_draws > grid.n_primary {
        return Err(Error::InvalidInput(format!(
            "null draws must lie in 1..={} (the primary replicate count), got {null_draws}",
            grid.n_primary
        )));
    }
    let (vic, _) = build_curve(&[g], method, grid, seed, Which::Observed)?;
    let (bases, null_method) = null_bases(g, seed, null_draws)?;
    let refs: Vec<&Graph> = bases.iter().collect();
    let (vic_random, _) = build_curve(&refs, method, grid, seed, Which::Null)?;
    let mut missing = missing_cells(&vic, Which::Observed);
    missing.extend(missing_cells(&vic_random, Which::Null));
    Ok(VICurveSet {
        grid: grid.clone(),
        method,
        master_seed: seed,
        n_nodes: g.node_count(),
        vic,
        vic_random,
        missing,
        null_method,
        null_draws,
    })
}
