//! Execution strategy for batch work.
//!
//! Every data-parallel loop in the crate (batch rendering, featurization,
//! per-estimator ensemble fitting) is written against the two functions
//! here instead of calling rayon directly.  With the default `parallel`
//! feature they run on the rayon thread pool; without it they compile to
//! plain sequential iterators.  The parallel path maps each index to an
//! independent closure call and collects in index order, so the output —
//! including every seeded-RNG decision, which is derived from the index,
//! never from thread identity — is bit-identical across both paths and any
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, parallel when the `parallel` feature is on.
/// Results are collected in input order.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, parallel when the `parallel` feature is on.
/// Results are collected in index order.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_collect`], available regardless of features.
/// Exists so benchmarks (and callers that want to pin down scheduling) can
/// compare against the parallel path within a single build.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: FnMut(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_indices`].
pub fn map_indices_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: FnMut(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Derives an independent per-task seed from a base seed and a task index
/// (splitmix64 finalizer).  Tasks seeded this way draw identical random
/// streams whether they run in parallel or sequentially, which is what
/// makes both execution paths bit-identical.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
