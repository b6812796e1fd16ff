//! Reproducible per-replicate random streams and bounded parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TRACETHRESH_THREADS";

/// Independent stream for replicate `index` under `seed`.
///
/// Streams depend only on `(seed, index)`, so results do not depend on the
/// order in which replicates run.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run `op` on a thread pool sized by `TRACETHRESH_THREADS`, or on the
/// global pool when the variable is unset or invalid.
pub fn with_thread_cap<R, F>(op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(op),
        None => op(),
    }
}
