//! Mapping independent work units over an optional caller-owned thread pool.
//!
//! Library code never spawns its own workers: callers (the CLI, the test
//! suite) build a `rayon::ThreadPool` and lend it here. With `None` the work
//! runs serially. Results come back in input order, so reductions are
//! independent of scheduling.

use rayon::prelude::*;
use rayon::ThreadPool;

/// Apply `f` to every unit, preserving order.
pub fn run_units<T, R, F>(units: Vec<T>, pool: Option<&ThreadPool>, f: F) -> Vec<R>
where
    T: Send + Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match pool {
        Some(pool) => pool.install(|| units.par_iter().map(|u| f(u)).collect()),
        None => units.iter().map(|u| f(u)).collect(),
    }
}

/// Build a pool with the requested number of threads.
pub fn build_pool(workers: usize) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction")
}
