//! Seeded substreams and deterministic replicate execution.
//!
//! Replicate `i` of a run seeded with `master` always draws from the stream
//! `derive_substream(master, i)`, whichever worker thread executes it, and
//! results are collected in replicate order. Aggregates are therefore
//! independent of the thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_2024_0001;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "REINFORCE_THREADS";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Per-path generator.
pub type PathRng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer (Stafford variant 13). Bijective on `u64`.
#[inline]
pub fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `avalanche(master + (index + 1)·γ)` with `γ` the odd golden-ratio
/// increment. Distinct indices map to distinct values for a fixed master
/// seed since both steps are bijections.
#[inline]
pub fn derive_substream(master_seed: u64, replicate_index: u64) -> u64 {
    avalanche(master_seed.wrapping_add(replicate_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn path_rng(master_seed: u64, replicate_index: u64) -> PathRng {
    PathRng::seed_from_u64(derive_substream(master_seed, replicate_index))
}

/// Worker-thread budget for replicate loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallelism {
    threads: usize,
}

impl Parallelism {
    pub fn new(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
        }
    }

    /// Reads `REINFORCE_THREADS`, falling back to the number of CPUs.
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Evaluates `job(i)` for `i in 0..count`, returning results in index order.
    pub fn map_replicates<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.threads == 1 {
            return (0..count as u64).map(job).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .expect("thread pool");
        pool.install(|| (0..count as u64).into_par_iter().map(&job).collect())
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::from_env()
    }
}
