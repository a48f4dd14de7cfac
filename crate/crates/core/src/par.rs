//! Data-parallel helpers with a sequential fallback.
//!
//! Every parallel loop in this crate routes through [`map_indexed`], which
//! preserves input order in its output. Callers that need determinism sum
//! or write results in index order afterwards, so a run with the `parallel`
//! feature (or any thread count) is byte-identical to a sequential run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, optionally in parallel. Output order always
/// matches input order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    if parallel && items.len() > 1 {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect()
    } else {
        items
            .iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, U, F>(items: &[T], _parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    items
        .iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

/// Run `f` inside a rayon pool with `threads` workers (0 = library default).
/// Without the `parallel` feature the closure runs on the current thread.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 1 {
        return f();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
