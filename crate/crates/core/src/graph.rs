//! Undirected simple graphs with string node identifiers.
//!
//! Node identifiers are mapped to dense indices `0..n` in first-appearance
//! order. Edges are stored canonically as `(u, v)` with `u < v`, sorted, and
//! every adjacency list is kept sorted so edge lookup is a binary search.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<String>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// What was discarded while building a graph from raw pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Per-node degrees, indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Erdős–Gallai test for a simple-graph realisation.
    pub fn is_graphical(&self) -> bool {
        if self.total() % 2 == 1 {
            return false;
        }
        let mut d = self.0.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let n = d.len();
        let mut prefix = 0usize;
        for k in 1..=n {
            prefix += d[k - 1];
            let tail: usize = d[k..].iter().map(|&x| x.min(k)).sum();
            if prefix > k * (k - 1) + tail {
                return false;
            }
        }
        true
    }
}

/// JSON summary of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub degree_min: usize,
    pub degree_max: usize,
    pub components: usize,
    pub isolated: usize,
}

impl Graph {
    /// Build from raw index pairs over nodes `0..ids.len()`, collapsing
    /// duplicates and dropping self-loops.
    pub fn from_pairs<I>(ids: Vec<String>, pairs: I) -> (Graph, IngestReport)
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = ids.len();
        let mut report = IngestReport::default();
        let mut edges = Vec::new();
        for (a, b) in pairs {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b {
                report.self_loops += 1;
                continue;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        report.duplicates = before - edges.len();
        (Self::from_canonical(ids, edges), report)
    }

    /// Build on nodes named `"0".."n-1"`.
    pub fn from_index_pairs<I>(n: usize, pairs: I) -> (Graph, IngestReport)
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_pairs(default_ids(n), pairs)
    }

    /// Same node set as `self`, different edges. Panics in debug builds if
    /// the edges are not simple.
    pub fn with_edges(&self, edges: Vec<(usize, usize)>) -> Graph {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        debug_assert!(edges.windows(2).all(|w| w[0] != w[1]), "duplicate edge");
        debug_assert!(edges.iter().all(|&(a, b)| a != b), "self-loop");
        Self::from_canonical(self.ids.clone(), edges)
    }

    fn from_canonical(ids: Vec<String>, edges: Vec<(usize, usize)>) -> Graph {
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            ids,
            edges,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges, `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, u: usize) -> &str {
        &self.ids[u]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence(self.adjacency.iter().map(Vec::len).collect())
    }

    /// Maximal connected node sets, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.connected_components().len() == 1
    }

    pub fn summary(&self) -> GraphSummary {
        let degrees = self.degree_sequence().0;
        GraphSummary {
            n: self.node_count(),
            m: self.edge_count(),
            degree_min: degrees.iter().copied().min().unwrap_or(0),
            degree_max: degrees.iter().copied().max().unwrap_or(0),
            components: self.connected_components().len(),
            isolated: degrees.iter().filter(|&&d| d == 0).count(),
        }
    }

    /// Canonical edge list: one `u v` line per edge using original ids.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(a, b) in &self.edges {
            writeln!(out, "{} {}", self.ids[a], self.ids[b])?;
        }
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ids are utf-8")
    }
}

pub(crate) fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Parse an edge list from a reader. `delimiter = None` splits on any
/// whitespace; lines starting with `#` and blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    delimiter: Option<char>,
    path: &Path,
) -> Result<(Graph, IngestReport)> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = match delimiter {
            None => trimmed.split_whitespace().collect(),
            Some(c) => trimmed
                .split(c)
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .collect(),
        };
        if tokens.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 2 node tokens, found {}", tokens.len()),
            });
        }
        let mut idx = |tok: &str| -> usize {
            if let Some(&i) = index.get(tok) {
                return i;
            }
            let i = ids.len();
            ids.push(tok.to_string());
            index.insert(tok.to_string(), i);
            i
        };
        let a = idx(tokens[0]);
        let b = idx(tokens[1]);
        pairs.push((a, b));
    }
    Ok(Graph::from_pairs(ids, pairs))
}

/// Load an edge list file. See [`parse_edge_list`].
pub fn load_edge_list(path: &Path, delimiter: Option<char>) -> Result<(Graph, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), delimiter, path)
}

/// Edge set as pairs of original ids, orientation-free.
pub fn id_edge_set(g: &Graph) -> HashSet<(String, String)> {
    g.edges()
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (g.id(a).to_string(), g.id(b).to_string());
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect()
}
