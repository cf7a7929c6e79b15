//! Shared pieces of the permutation tests.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Fewest permutations any test accepts.
pub const MIN_PERMUTATIONS: usize = 99;
/// Permuted statistics within this relative distance of the observed one
/// count as ties, so exact ties survive floating-point reordering.
pub const TIE_RTOL: f64 = 1e-10;

pub fn check_permutations(n_perm: usize) -> Result<()> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidInput(format!(
            "{n_perm} permutations requested; at least {MIN_PERMUTATIONS} are required"
        )));
    }
    Ok(())
}

/// Whether a permuted statistic is at least as extreme as the observed one.
pub fn at_least(permuted: f64, observed: f64) -> bool {
    permuted >= observed - TIE_RTOL * observed.abs()
}

/// `(1 + #exceedances) / (n_perm + 1)`.
pub fn p_value(exceed: usize, n_perm: usize) -> f64 {
    (1 + exceed) as f64 / (n_perm + 1) as f64
}

/// `n_perm` permutations of `0..n`, each obtained by shuffling the previous
/// one. Entry `perm[i]` is the curve placed at position `i`; the first `n1`
/// positions form group one.
pub fn permutation_sequence(n: usize, n_perm: usize, stream: RngStream) -> Vec<Vec<usize>> {
    let mut rng = stream.rng();
    let mut current: Vec<usize> = (0..n).collect();
    (0..n_perm)
        .map(|_| {
            current.shuffle(&mut rng);
            current.clone()
        })
        .collect()
}

/// Benjamini–Hochberg step-up adjusted p-values.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        adjusted[i] = running.min(1.0);
    }
    adjusted
}
