//! Data-parallel building blocks.
//!
//! With the `parallel` feature these dispatch to rayon, otherwise they run on
//! the calling thread. Both paths return bit-identical results: maps keep
//! index order and sums use a fixed pairwise split that does not depend on
//! the number of workers.

/// Leaves below this length are summed left to right.
const SUM_LEAF: usize = 256;

/// Below this many items the parallel paths fall back to a plain loop.
#[cfg(feature = "parallel")]
const PAR_MIN: usize = 1 << 12;

/// Evaluates `f(0), f(1), ..., f(len - 1)` in index order.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if len >= PAR_MIN {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    (0..len).map(f).collect()
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if items.len() >= PAR_MIN {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Applies `f` to consecutive chunks of length `chunk`.
pub fn for_each_chunk_mut<T, F>(items: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if items.len() >= PAR_MIN && items.len() / chunk > 1 {
            use rayon::prelude::*;
            items.par_chunks_mut(chunk).for_each(f);
            return;
        }
    }
    items.chunks_mut(chunk).for_each(f);
}

/// Pairwise (tree) summation with split points fixed by length only.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= SUM_LEAF {
        return values.iter().sum();
    }
    let mid = split_point(values.len());
    let (lo, hi) = values.split_at(mid);
    #[cfg(feature = "parallel")]
    {
        if values.len() >= PAR_MIN {
            let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
            return a + b;
        }
    }
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Sum of `f(i)` over `0..len`, evaluated in parallel and combined pairwise.
pub fn sum_range<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&map_range(len, f))
}

/// Runs `op` over `0..blocks` and folds the per-block results with `merge`
/// in block order.
pub fn reduce_blocks<T, F, M>(blocks: usize, op: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(T, T) -> T,
{
    #[cfg(feature = "parallel")]
    {
        if blocks > 1 {
            use rayon::prelude::*;
            let parts: Vec<T> = (0..blocks).into_par_iter().map(op).collect();
            return parts.into_iter().reduce(merge);
        }
    }
    (0..blocks).map(op).reduce(merge)
}

/// Largest power of two strictly below `len`, so that dyadic lengths split
/// evenly.
fn split_point(len: usize) -> usize {
    debug_assert!(len > 1);
    let p = len.next_power_of_two() / 2;
    if p == 0 {
        1
    } else {
        p
    }
}
