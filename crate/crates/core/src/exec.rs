//! Execution strategy for the data-parallel inner loops.
//!
//! Batch work is split into fixed-size chunks whose partial results are
//! reduced in chunk order, so the sequential and parallel paths produce
//! bit-identical numbers. Without the `parallel` feature every mode runs
//! sequentially.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Number of items folded into one partial result.
pub const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// Whether this mode actually fans out to a thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive index ranges of length [`CHUNK`] covering
/// `0..n` (the last may be shorter), preserving order.
pub fn chunked_map<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    map_range(mode, n.div_ceil(CHUNK), |c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
}

/// Folds `0..n` in chunks of [`CHUNK`]: `fold` accumulates one chunk starting
/// from `init()`, and the chunk partials are merged left to right with
/// `merge`. The reduction order does not depend on `mode`.
pub fn chunked_fold<A, I, F, M>(mode: ExecMode, n: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(&mut A, A),
{
    let partials = chunked_map(mode, n, |range| {
        let mut acc = init();
        for i in range {
            fold(&mut acc, i);
        }
        acc
    });
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}
