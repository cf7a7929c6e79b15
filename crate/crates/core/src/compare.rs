//! Information-theoretic comparison of two hard partitions.
//!
//! All quantities are in nats. Probabilities are counts divided by `n`, and
//! empty cells contribute nothing (`0 ln 0 = 0`).

use crate::error::Result;
use crate::partition::Partition;

/// Co-occurrence counts `n[k][k']` between the communities of two partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<usize>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    n: usize,
}

impl ContingencyTable {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        a.check_same_nodes(b)?;
        let rows = a.community_count();
        let cols = b.community_count();
        let mut counts = vec![0usize; rows * cols];
        let mut row_sums = vec![0usize; rows];
        let mut col_sums = vec![0usize; cols];
        for (&i, &j) in a.labels().iter().zip(b.labels()) {
            counts[i * cols + j] += 1;
            row_sums[i] += 1;
            col_sums[j] += 1;
        }
        Ok(ContingencyTable {
            rows,
            cols,
            counts,
            row_sums,
            col_sums,
            n: a.len(),
        })
    }

    pub fn count(&self, k: usize, k2: usize) -> usize {
        self.counts[k * self.cols + k2]
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn total(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn nonzero_cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (0..self.cols).filter_map(move |j| {
                let c = self.counts[i * self.cols + j];
                (c > 0).then_some((i, j, c))
            })
        })
    }

    /// I(C, C') computed from the table.
    pub fn mutual_information(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let mi: f64 = self
            .nonzero_cells()
            .map(|(i, j, c)| {
                let pij = c as f64 / n;
                let ratio = (c as f64 * n) / (self.row_sums[i] as f64 * self.col_sums[j] as f64);
                pij * ratio.ln()
            })
            .sum();
        mi.max(0.0)
    }

    /// H(C | C'), rows conditioned on columns.
    pub fn conditional_entropy_rows_given_cols(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let h: f64 = self
            .nonzero_cells()
            .map(|(_, j, c)| {
                let pij = c as f64 / n;
                -pij * (c as f64 / self.col_sums[j] as f64).ln()
            })
            .sum();
        h.max(0.0)
    }

    /// H(C' | C), columns conditioned on rows.
    pub fn conditional_entropy_cols_given_rows(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let h: f64 = self
            .nonzero_cells()
            .map(|(i, _, c)| {
                let pij = c as f64 / n;
                -pij * (c as f64 / self.row_sums[i] as f64).ln()
            })
            .sum();
        h.max(0.0)
    }
}

fn entropy_of_sizes(sizes: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Shannon entropy of the community-size distribution.
pub fn entropy(c: &Partition) -> f64 {
    entropy_of_sizes(&c.sizes(), c.len())
}

pub fn mutual_information(a: &Partition, b: &Partition) -> Result<f64> {
    Ok(ContingencyTable::new(a, b)?.mutual_information())
}

/// VI(C, C') = H(C) + H(C') - 2 I(C, C').
pub fn variation_of_information(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    Ok(vi_from_table(&table))
}

pub(crate) fn vi_from_table(table: &ContingencyTable) -> f64 {
    let (rows, cols) = table.shape();
    if rows == cols && table.nonzero_cells().count() == rows {
        // One-to-one community matching: identical up to relabeling.
        return 0.0;
    }
    let ha = entropy_of_sizes(table.row_sums(), table.total());
    let hb = entropy_of_sizes(table.col_sums(), table.total());
    let vi = ha + hb - 2.0 * table.mutual_information();
    // Cancellation can leave -1e-16 for identical partitions.
    vi.max(0.0)
}

/// VI through the conditional-entropy form H(C|C') + H(C'|C).
pub fn variation_of_information_conditional(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    Ok(table.conditional_entropy_rows_given_cols() + table.conditional_entropy_cols_given_rows())
}
