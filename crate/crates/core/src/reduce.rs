//! Thread-count-independent summation.
//!
//! The reduction tree depends only on the slice length: leaves of at most
//! [`LEAF`] elements are summed left to right, interior nodes split at the
//! midpoint. Rayon may execute subtrees on any worker, but the arithmetic is
//! the same for every pool size, so results are bitwise reproducible.

use rayon::prelude::*;

const LEAF: usize = 512;

/// Pairwise sum with a fixed reduction tree.
pub fn det_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    let (a, b) = rayon::join(|| det_sum(lo), || det_sum(hi));
    a + b
}

/// Maps every index in `0..n` in parallel and sums the results with [`det_sum`].
pub fn det_sum_map<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let values: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    det_sum(&values)
}
