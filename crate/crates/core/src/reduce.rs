//! Reductions with a fixed summation order.
//!
//! Every global sum in the solver goes through these helpers so that results
//! do not depend on how rayon happened to split the work.

use rayon::prelude::*;

use crate::real::Real;

const LEAF: usize = 16;

/// Pairwise (cascade) summation in a fixed tree order.
pub fn pairwise_sum<T: Real>(v: &[T]) -> T {
    if v.len() <= LEAF {
        let mut s = T::zero();
        for &x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Evaluates `f` for every index in `0..n` in parallel and sums the results
/// pairwise in index order.
pub fn ordered_sum_by<T, F>(n: usize, f: F) -> T
where
    T: Real,
    F: Fn(usize) -> T + Sync + Send,
{
    let parts: Vec<T> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&parts)
}

/// Deterministic dot product of two equally sized slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    const CHUNK: usize = 4096;
    let n = a.len().div_ceil(CHUNK);
    ordered_sum_by(n, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(a.len());
        let mut s = T::zero();
        for i in lo..hi {
            s += a[i] * b[i];
        }
        s
    })
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
