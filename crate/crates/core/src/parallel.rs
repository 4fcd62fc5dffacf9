//! Worker-pool control for scans and restarts.

use rayon::ThreadPoolBuilder;

/// Run `f` inside a rayon pool with `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(n) => ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
    }
}
