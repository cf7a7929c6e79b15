use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard assignment of every node to one community.
///
/// Labels are canonical: communities are numbered `0..K` in order of first
/// appearance, so two partitions equal up to relabeling compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalise arbitrary labels.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Partition {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            k: map.len(),
            labels,
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn single_cluster(n: usize) -> Partition {
        Partition {
            labels: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of non-empty communities.
    pub fn community_count(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l].push(u);
        }
        out
    }

    pub(crate) fn check_same_nodes(&self, other: &Partition) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "partitions cover {} and {} nodes",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Serialised partition: `{labels, K, Q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub labels: Vec<usize>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
}

impl PartitionRecord {
    pub fn new(p: &Partition, q: Option<f64>) -> Self {
        PartitionRecord {
            labels: p.labels.clone(),
            k: p.k,
            q,
        }
    }

    pub fn to_partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }
}
