//! Execution-mode switch between rayon and sequential iteration.
//!
//! Independent tasks produce their results into distinct output slots, so
//! both modes yield bit-identical results; only wall time differs.

/// How data-parallel loops (Monte Carlo rows, sweep points) execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Use the rayon thread pool. Without the `parallel` feature this
    /// silently degrades to sequential execution.
    #[default]
    Parallel,
    Sequential,
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        Execution::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, _exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
