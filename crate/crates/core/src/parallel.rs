//! Deterministic data-parallel reductions.
//!
//! Work is split into fixed index chunks whose partial sums are combined
//! sequentially in chunk order, so the floating-point result does not
//! depend on how many worker threads rayon happens to use.

use rayon::prelude::*;
use std::ops::Add;

const CHUNK: usize = 64;

/// Sum `f(i)` for `i in 0..n` with a fixed reduction tree.
pub fn ordered_sum<T, F>(n: usize, zero: T, f: F) -> T
where
    T: Add<Output = T> + Copy + Send + Sync,
    F: Fn(usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).fold(zero, |acc, i| acc + f(i))
        })
        .collect();
    partial.into_iter().fold(zero, |acc, x| acc + x)
}

/// Sum vector-valued contributions `f(i)` into a buffer of length `len`.
pub fn ordered_vec_sum<F>(n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![0.0; len];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            for i in lo..hi {
                f(i, &mut buf);
            }
            buf
        })
        .collect();
    let mut out = vec![0.0; len];
    for p in partial {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out
}
