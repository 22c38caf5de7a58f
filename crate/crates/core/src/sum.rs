//! Fixed-order reductions.
//!
//! Every reduction in the crate goes through [`pairwise_sum`] so that results
//! do not depend on how the terms were produced (serially or in parallel).

const BLOCK: usize = 32;

/// Pairwise (tree) summation with a fixed split rule.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_sum_by(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let terms: Vec<f64> = (0..n).map(f).collect();
    pairwise_sum(&terms)
}
