//! Data-parallel helpers with a sequential fallback.
//!
//! The inner loops that benefit from parallelism — intra-layer vertex
//! execution, tournament group evaluation, k-means assignment — all go
//! through [`par_map`]. With the `parallel` feature (default) it runs on a
//! dedicated rayon pool sized by the caller; built without the feature, or
//! called with `threads <= 1`, it degrades to a plain sequential map.
//!
//! Results are returned in input order and reductions happen sequentially
//! afterwards, so output values are identical in both modes.

/// Maps `f` over `items`, using up to `threads` worker threads. Pools are
/// built once per distinct thread count and reused, so per-call overhead
/// stays negligible even for tight iteration loops.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(threads: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if threads <= 1 || items.len() <= 1 {
        return seq_map(items, f);
    }
    match pool_for(threads) {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            items.par_iter().map(&f).collect()
        }),
        // Pool creation can fail under resource pressure; the sequential
        // path produces identical results.
        None => seq_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn pool_for(threads: usize) -> Option<std::sync::Arc<rayon::ThreadPool>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut pools = pools.lock().expect("pool cache lock");
    if let Some(pool) = pools.get(&threads) {
        return Some(pool.clone());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .ok()?;
    let pool = Arc::new(pool);
    pools.insert(threads, pool.clone());
    Some(pool)
}

/// Sequential-mode `par_map`.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(_threads: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    seq_map(items, f)
}

/// Always-sequential map, kept public so benchmarks can compare modes.
pub fn seq_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
