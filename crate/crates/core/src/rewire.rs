//! Degree-preserving perturbation and configuration-model null graphs.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Graph};
use crate::rng::RngStream;

/// Attempts allowed per requested swap before giving up.
pub const SWAP_ATTEMPT_FACTOR: usize = 100;
/// Stub matchings tried before the configuration model reports failure.
pub const CM_MAX_MATCHINGS: usize = 1000;
/// Swaps per edge used when the null graph falls back to edge-swap mixing.
pub const NULL_MIXING_SWAPS_PER_EDGE: usize = 10;

/// Fraction of edges to rewire, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerturbationLevel(f64);

impl PerturbationLevel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "perturbation level {p} is outside [0, 1]"
            )));
        }
        Ok(PerturbationLevel(p))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Successful swaps needed: `ceil(p m / 2)`, each swap moving two edges.
    pub fn swap_count(&self, edges: usize) -> usize {
        // The epsilon keeps e.g. 0.3 * 100 / 2 from rounding up to 16.
        (self.0 * edges as f64 / 2.0 - 1e-9).ceil().max(0.0) as usize
    }
}

/// Rewire a fraction `p` of the edges with double-edge swaps
/// `(a,b),(c,d) -> (a,d),(c,b)`, rejecting swaps that would create a
/// self-loop or a duplicate edge.
pub fn rewire(g: &Graph, p: PerturbationLevel, stream: RngStream) -> Result<Graph> {
    rewire_swaps(g, p.swap_count(g.edge_count()), stream)
}

/// Perform exactly `swaps` successful double-edge swaps.
pub fn rewire_swaps(g: &Graph, swaps: usize, stream: RngStream) -> Result<Graph> {
    if swaps == 0 {
        return Ok(g.clone());
    }
    let mut edges: Vec<(usize, usize)> = g.edges().to_vec();
    let m = edges.len();
    let budget = SWAP_ATTEMPT_FACTOR * swaps;
    if m < 2 {
        return Err(Error::Saturation {
            achieved: 0,
            requested: swaps,
            attempts: 0,
        });
    }
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut rng = stream.rng();
    let mut done = 0usize;
    let mut attempts = 0usize;
    while done < swaps {
        if attempts == budget {
            return Err(Error::Saturation {
                achieved: done,
                requested: swaps,
                attempts,
            });
        }
        attempts += 1;
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = if rng.random_bool(0.5) {
            edges[j]
        } else {
            let (x, y) = edges[j];
            (y, x)
        };
        if a == d || c == b {
            continue;
        }
        let e1 = (a.min(d), a.max(d));
        let e2 = (c.min(b), c.max(b));
        if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
            continue;
        }
        present.remove(&edges[i]);
        present.remove(&edges[j]);
        present.insert(e1);
        present.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
        done += 1;
    }
    Ok(g.with_edges(edges))
}

/// Take all stubs, pair them uniformly at random and reject the whole
/// matching if it contains a self-loop or a multi-edge.
pub fn stub_matching(
    d: &DegreeSequence,
    stream: RngStream,
    max_matchings: usize,
) -> Result<Vec<(usize, usize)>> {
    if d.total() % 2 == 1 {
        return Err(Error::NotGraphical(format!("degree sum {} is odd", d.total())));
    }
    if !d.is_graphical() {
        return Err(Error::NotGraphical(
            "fails the Erdős–Gallai inequalities".to_string(),
        ));
    }
    let mut stubs: Vec<usize> = d
        .0
        .iter()
        .enumerate()
        .flat_map(|(u, &k)| std::iter::repeat_n(u, k))
        .collect();
    let mut rng = stream.rng();
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(stubs.len() / 2);
    'matching: for _ in 0..max_matchings {
        stubs.shuffle(&mut rng);
        seen.clear();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'matching;
            }
        }
        let mut edges: Vec<(usize, usize)> = seen.iter().copied().collect();
        edges.sort_unstable();
        return Ok(edges);
    }
    Err(Error::Sampling {
        attempts: max_matchings,
    })
}

/// Simple graph with degree sequence `d`, sampled uniformly by stub matching
/// with rejection. Nodes are named `"0".."n-1"`.
pub fn configuration_model(d: &DegreeSequence, stream: RngStream) -> Result<Graph> {
    let edges = stub_matching(d, stream, CM_MAX_MATCHINGS)?;
    Ok(Graph::from_index_pairs(d.len(), edges).0)
}

/// How a null base graph was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMethod {
    /// Configuration model with whole-sample rejection.
    Rejection,
    /// Rejection exhausted its budget; the observed graph was randomised with
    /// `NULL_MIXING_SWAPS_PER_EDGE * m` double-edge swaps instead.
    EdgeSwap,
}

/// Null graph sharing `g`'s degree sequence and node ids. Tries the
/// rejection configuration model first; when `allow_fallback` is set and no
/// simple matching is found, randomises `g` by edge swaps.
pub fn null_graph(g: &Graph, stream: RngStream, allow_fallback: bool) -> Result<(Graph, NullMethod)> {
    match stub_matching(&g.degree_sequence(), stream, CM_MAX_MATCHINGS) {
        Ok(edges) => Ok((g.with_edges(edges), NullMethod::Rejection)),
        Err(Error::Sampling { attempts }) if allow_fallback => {
            log::info!(
                "configuration model rejected {attempts} matchings; mixing by edge swaps"
            );
            let mix = RngStream::new(stream.seed, stream.level, stream.replicate.wrapping_add(1));
            let swaps = NULL_MIXING_SWAPS_PER_EDGE * g.edge_count();
            Ok((rewire_swaps(g, swaps, mix)?, NullMethod::EdgeSwap))
        }
        Err(e) => Err(e),
    }
}
