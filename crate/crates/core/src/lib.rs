//! Mining-pool strategy simulator.
//!
//! Block discovery is modeled as a Poisson process over a constant
//! difficulty. On top of it the crate simulates pools and their reward
//! schemes, generalized block withholding (a coalition that infiltrates
//! pools and destroys its blocks there), selfish mining, and the statistics
//! a pool operator or miner could use to notice either.
//!
//! ```
//! use poolsim::withholding::{relative_gain, WithholdParams};
//!
//! let gain = relative_gain(WithholdParams::new(0.2, 0.5)?)?;
//! assert!((gain - 0.0625).abs() < 1e-12);
//! # Ok::<(), poolsim::Error>(())
//! ```

pub mod amount;
pub mod dag;
pub mod detection;
pub mod error;
pub mod formulas;
pub mod ids;
pub mod model;
pub mod pool;
pub mod scenario;
pub mod selfish;
pub mod sim;
pub mod stats;
pub mod withholding;

pub use amount::Amount;
pub use error::{Error, Result};
pub use ids::{CartelId, MinerId, PoolId};
pub use model::{Difficulty, Hashrate};
pub use sim::{run, MinerSpec, SimConfig, SimResult, Strategy};
