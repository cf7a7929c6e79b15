//! Modularity and modularity-maximising community detection.

mod fast_greedy;
mod louvain;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;

pub use fast_greedy::detect_fast_greedy;
pub use louvain::detect_louvain;

/// Newman–Girvan modularity `Σ_k e_k/m − (d_k/2m)²`.
pub fn modularity(g: &Graph, c: &Partition) -> Result<f64> {
    if c.len() != g.node_count() {
        return Err(Error::Dimension(format!(
            "partition covers {} nodes, graph has {}",
            c.len(),
            g.node_count()
        )));
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::UndefinedModularity);
    }
    let k = c.community_count();
    let mut intra = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for &(u, v) in g.edges() {
        let (cu, cv) = (c.label(u), c.label(v));
        if cu == cv {
            intra[cu] += 1;
        }
        degree[cu] += 1;
        degree[cv] += 1;
    }
    let m = m as f64;
    Ok(intra
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| {
            let a = d as f64 / (2.0 * m);
            e as f64 / m - a * a
        })
        .sum())
}

/// Which modularity optimiser to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorChoice {
    FastGreedy,
    Louvain,
}

impl DetectorChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorChoice::FastGreedy => "fastgreedy",
            DetectorChoice::Louvain => "louvain",
        }
    }
}

impl fmt::Display for DetectorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fastgreedy" => Ok(DetectorChoice::FastGreedy),
            "louvain" => Ok(DetectorChoice::Louvain),
            _ => Err(Error::InvalidInput(format!("unknown method `{s}`"))),
        }
    }
}

/// Run the chosen detector. `seed` only affects Louvain.
pub fn detect(g: &Graph, method: DetectorChoice, seed: u64) -> Partition {
    match method {
        DetectorChoice::FastGreedy => detect_fast_greedy(g),
        DetectorChoice::Louvain => detect_louvain(g, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Graph {
        Graph::from_index_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).0
    }

    #[test]
    fn two_triangles_modularity_is_half() {
        let g = two_triangles();
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        assert_eq!(modularity(&g, &p).unwrap(), 0.5);
    }

    #[test]
    fn single_community_is_zero() {
        let g = two_triangles();
        assert_eq!(modularity(&g, &Partition::single_cluster(6)).unwrap(), 0.0);
    }

    #[test]
    fn k4_split_into_pairs() {
        let g = Graph::from_index_pairs(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).0;
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        // e_k/m = 1/6 each, d_k/2m = 6/12 each.
        let expected = 2.0 * (1.0 / 6.0 - 0.25);
        assert!((modularity(&g, &p).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn edgeless_is_undefined() {
        let g = Graph::from_index_pairs(3, []).0;
        assert!(matches!(
            modularity(&g, &Partition::singletons(3)),
            Err(Error::UndefinedModularity)
        ));
    }

    #[test]
    fn relabel_invariance() {
        let g = two_triangles();
        let a = Partition::from_labels(&[0, 1, 0, 2, 2, 1]);
        let b = Partition::from_labels(&[5, 9, 5, 1, 1, 9]);
        assert_eq!(modularity(&g, &a).unwrap(), modularity(&g, &b).unwrap());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("fastgreedy".parse::<DetectorChoice>().unwrap(), DetectorChoice::FastGreedy);
        assert_eq!("fast_greedy".parse::<DetectorChoice>().unwrap(), DetectorChoice::FastGreedy);
        assert_eq!("Louvain".parse::<DetectorChoice>().unwrap(), DetectorChoice::Louvain);
        assert!("infomap".parse::<DetectorChoice>().is_err());
        assert_eq!(serde_json::to_string(&DetectorChoice::FastGreedy).unwrap(), "\"fastgreedy\"");
    }
}
