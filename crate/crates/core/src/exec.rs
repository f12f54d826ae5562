//! Execution strategy for the data-parallel inner loops.
//!
//! With the `parallel` feature, [`Parallelism::Auto`] hands large batches to
//! rayon. Without it, every path runs sequentially. Both paths produce
//! bit-identical results: only per-item work is distributed, reductions stay
//! sequential and in input order.

/// Batches smaller than this are never split across threads.
pub const PAR_MIN_ITEMS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Always run on the calling thread.
    Sequential,
    /// Use the rayon pool when the feature is enabled and the batch is large.
    #[default]
    Auto,
}

impl Parallelism {
    pub fn use_threads(self, items: usize) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Auto && items >= PAR_MIN_ITEMS
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_slice<T, R, F>(items: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode.use_threads(items.len()) {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Maps `f` over independent jobs, one job per task regardless of size.
pub fn map_jobs<T, R, F>(jobs: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Auto && jobs.len() > 1 {
            use rayon::prelude::*;
            return jobs.par_iter().map(f).collect();
        }
    }
    let _ = mode;
    jobs.iter().map(f).collect()
}
