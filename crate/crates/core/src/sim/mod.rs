//! Discrete-event mining simulation.

mod config;
mod engine;
mod replicate;
mod result;

pub use crate::dag::{BlockEvent, BlockFlags, BlockId, BlockStatus};
pub use config::{
    MinerSpec, SimConfig, Strategy, DEFAULT_REWARD, DEFAULT_SHARES_PER_BLOCK, MAX_TOTAL_BLOCKS,
};
pub use engine::{next_block_owner, resolve_fork, run, ForkOutcome, OwnerSampler};
pub use replicate::{replicate_seed, replicate_seeds, run_replicates, run_replicates_with};
pub use result::SimResult;
