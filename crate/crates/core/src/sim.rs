//! Reproducible parallel Monte Carlo.
//!
//! Trials are cut into fixed-size batches. Batch `b` draws from a ChaCha8
//! generator seeded with the master seed and switched to stream `b`, so the
//! random numbers consumed by trial `i` depend only on `(seed, i)` and never
//! on how many workers run the batches or in what order they finish.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Named generator used for every stochastic operation.
pub type SimRng = ChaCha8Rng;

/// Trials per independently seeded batch. Part of the reproducibility
/// contract: changing it changes every simulated number.
pub const BATCH_SIZE: usize = 4096;

/// Generator for batch `batch` under `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Generator for a single stochastic call seeded directly by the caller.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `trials` independent trials of `f` and returns their results in trial order.
///
/// `workers == 0` uses rayon's global pool; any other value runs on a
/// dedicated pool of that many threads. The output is identical either way.
pub fn run_trials<T, F>(trials: usize, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    let work = || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(seed, b as u64);
                let len = BATCH_SIZE.min(trials - b * BATCH_SIZE);
                (0..len).map(|_| f(&mut rng)).collect::<Vec<T>>()
            })
            .collect::<Vec<Vec<T>>>()
    };
    let nested = if workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(work)
    };
    nested.into_iter().flatten().collect()
}
