//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate is written so that its output depends
//! only on the item index, never on how items are scheduled: reductions
//! are over integers or order-preserving collects. `Exec::Sequential` and
//! `Exec::Parallel` therefore produce bit-identical results.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    /// Rayon work stealing. Identical to `Sequential` when the crate is
    /// built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this build can actually run loops in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Order-preserving map over `0..n`.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Map `0..n` and fold with an associative, commutative `combine`.
    ///
    /// Callers must only use this with exact (integer) accumulators so that
    /// the reduction tree shape cannot change the result.
    pub fn map_reduce<T, F, I, C>(self, n: u64, identity: I, f: F, combine: C) -> T
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
        I: Fn() -> T + Sync + Send,
        C: Fn(T, T) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).reduce(&identity, &combine)
            }
            _ => (0..n).map(f).fold(identity(), combine),
        }
    }
}

/// Run `f` with at most `threads` worker threads. `None` or a build without
/// the `parallel` feature runs `f` directly.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}
