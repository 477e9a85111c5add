//! Independent replicates with derived seeds.
//!
//! Replicate `i` of a batch seeded with `master` runs with
//! `replicate_seed(master, i)`. Results come back in replicate order no matter
//! how many threads ran them, so any fold over them is reproducible.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::SimConfig;
use super::engine::run;
use super::result::SimResult;

/// SplitMix64 finalizer applied to `master + (i + 1)·φ`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| replicate_seed(master, i))
        .collect()
}

/// Runs `cfg` once per seed and maps each result through `summarize` so that
/// block trees are dropped as soon as they are summarized.
///
/// `threads == None` uses rayon's global pool; `Some(n)` a dedicated pool of
/// `n` threads.
pub fn run_replicates<T, F>(
    cfg: &SimConfig,
    seeds: &[u64],
    threads: Option<usize>,
    summarize: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &SimResult) -> T + Sync,
{
    cfg.validate()?;
    run_replicates_with(
        seeds,
        threads,
        |_, seed| {
            Ok(SimConfig {
                seed,
                ..cfg.clone()
            })
        },
        summarize,
    )
}

/// Like [`run_replicates`], but builds a fresh config for every replicate
/// from its index and seed.
pub fn run_replicates_with<T, B, F>(
    seeds: &[u64],
    threads: Option<usize>,
    build: B,
    summarize: F,
) -> Result<Vec<T>>
where
    T: Send,
    B: Fn(usize, u64) -> Result<SimConfig> + Sync,
    F: Fn(usize, &SimResult) -> T + Sync,
{
    let job = || {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| run(&build(i, seed)?).map(|r| summarize(i, &r)))
            .collect::<Result<Vec<T>>>()
    };
    match threads {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(job),
    }
}
