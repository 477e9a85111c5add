//! Selfish mining (block discarding strategy st₁).
//!
//! The cartel keeps newly found blocks secret and releases them so that
//! honest work is spent on blocks that end up stale. The state machine below
//! only decides *what to publish*; the simulation engine owns the block tree,
//! applies the γ tie split for honest miners, and settles rewards.
//!
//! At any moment there is either a single public branch, possibly with a
//! secret extension, or a public tie between an honest branch and a cartel
//! branch (which may itself carry a secret extension). `lead` counts secret
//! blocks above the highest public block.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dag::BlockId;
use crate::error::{Error, Result};
use crate::ids::{CartelId, MinerId};
use crate::sim::{self, BlockStatus, MinerSpec, SimConfig, SimResult, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfishParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl SelfishParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let p = SelfishParams { alpha, gamma };
        p.validate()?;
        Ok(p)
    }

    /// Honest miners pick a branch uniformly at random during a tie. Equivalent
    /// to γ = ½.
    pub fn random_tie_break(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::arg("alpha", self.alpha, "must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::arg("gamma", self.gamma, "must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelfishState {
    pub lead: u32,
    /// A cartel branch and an honest branch are tied at the public tip.
    pub public_fork: bool,
    pub secret_blocks: VecDeque<BlockId>,
}

/// Which side of a public tie an honest block extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Honest,
    Attacker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfishEvent {
    AttackerFinds(BlockId),
    /// An honest miner extended the public chain. Outside a tie the branch is
    /// always [`Branch::Honest`].
    HonestFinds(Branch),
}

impl SelfishState {
    pub fn is_consensus(&self) -> bool {
        self.lead == 0 && !self.public_fork
    }

    fn check(&self) -> Result<()> {
        if self.secret_blocks.len() != self.lead as usize {
            return Err(Error::InvalidTransition(
                "secret block count differs from lead",
            ));
        }
        if self.public_fork && self.lead == 1 {
            return Err(Error::InvalidTransition(
                "a tie with a single secret block cannot arise",
            ));
        }
        Ok(())
    }
}

/// Advances the cartel state by one block discovery and returns the blocks to
/// publish, oldest first.
pub fn step(mut state: SelfishState, event: SelfishEvent) -> Result<(SelfishState, Vec<BlockId>)> {
    state.check()?;
    let mut publish = Vec::new();
    match event {
        SelfishEvent::AttackerFinds(block) => {
            if state.lead == 0 && state.public_fork {
                // Our branch becomes the longest: reveal and take the race.
                publish.push(block);
                state.public_fork = false;
            } else {
                state.secret_blocks.push_back(block);
                state.lead += 1;
            }
        }
        SelfishEvent::HonestFinds(branch) => {
            if branch == Branch::Attacker && !state.public_fork {
                return Err(Error::InvalidTransition(
                    "honest block on an attacker branch without a public tie",
                ));
            }
            match state.lead {
                // Either plain consensus, or the honest block settles the tie.
                0 => state.public_fork = false,
                // Lead wiped out: reveal the secret block and race.
                1 => {
                    publish.extend(state.secret_blocks.drain(..));
                    state.lead = 0;
                    state.public_fork = true;
                }
                // Lead about to fall to 1: reveal everything and win.
                2 => {
                    publish.extend(state.secret_blocks.drain(..));
                    state.lead = 0;
                    state.public_fork = false;
                }
                // Comfortable lead: match the honest height with one block.
                _ => {
                    publish.extend(state.secret_blocks.pop_front());
                    state.lead -= 1;
                    state.public_fork = true;
                }
            }
        }
    }
    Ok((state, publish))
}

/// Minimum cartel share for selfish mining to beat honest mining, as a
/// function of network superiority `ns` (the γ tie split).
pub fn profitability_threshold(ns: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ns) {
        return Err(Error::arg("ns", ns, "must be in [0, 1]"));
    }
    Ok((1.0 - ns) / (3.0 - 2.0 * ns))
}

/// Two-miner population: one selfish cartel of power `alpha`, everyone else
/// honest and solo.
pub fn selfish_config(
    p: SelfishParams,
    blocks: u64,
    seed: u64,
    fork_punishment: Option<f64>,
) -> Result<SimConfig> {
    p.validate()?;
    let mut miners = vec![MinerSpec::solo("honest", 1.0 - p.alpha, Strategy::Honest)];
    if p.alpha > 0.0 {
        miners.push(MinerSpec::solo(
            "selfish",
            p.alpha,
            Strategy::SelfishMember {
                cartel: CartelId::new("cartel"),
            },
        ));
    }
    Ok(SimConfig {
        gamma: p.gamma,
        fork_punishment,
        ..SimConfig::new(miners, blocks, seed)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfishOutcome {
    /// Cartel share of all distributed block rewards.
    pub revenue_fraction: f64,
    pub premium: f64,
    pub waste: WasteSplit,
}

pub fn simulate(
    p: SelfishParams,
    blocks: u64,
    seed: u64,
    fork_punishment: Option<f64>,
) -> Result<SelfishOutcome> {
    let result = sim::run(&selfish_config(p, blocks, seed, fork_punishment)?)?;
    Ok(outcome(p, &result))
}

pub fn outcome(p: SelfishParams, result: &SimResult) -> SelfishOutcome {
    let revenue_fraction = attacker_revenue_fraction(result);
    SelfishOutcome {
        revenue_fraction,
        premium: revenue_fraction - p.alpha,
        waste: wasted_effort_split(result),
    }
}

/// Monte Carlo estimate of the cartel's revenue fraction.
pub fn relative_revenue(p: SelfishParams, blocks: u64, seed: u64) -> Result<f64> {
    Ok(simulate(p, blocks, seed, None)?.revenue_fraction)
}

pub fn attacker_revenue_fraction(result: &SimResult) -> f64 {
    let total = result.total_revenue().to_sat();
    if total == 0 {
        return 0.0;
    }
    let attacker: u64 = result
        .miners
        .iter()
        .filter(|m| m.strategy.is_selfish())
        .map(|m| result.revenue_of(&m.id).to_sat())
        .sum();
    attacker as f64 / total as f64
}

/// Stale blocks split by who mined them, each as a fraction of all blocks
/// that reached the network (withheld blocks excluded).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WasteSplit {
    pub attacker_stale_fraction: f64,
    pub honest_stale_fraction: f64,
    /// Honest stale blocks whose parent is also stale.
    pub honest_child_of_stale_fraction: f64,
}

pub fn wasted_effort_split(result: &SimResult) -> WasteSplit {
    let selfish: Vec<bool> = result
        .miners
        .iter()
        .map(|m| m.strategy.is_selfish())
        .collect();
    let mut mined = 0u64;
    let (mut attacker, mut honest, mut honest_child) = (0u64, 0u64, 0u64);
    for b in result.dag.iter().filter(|b| !b.flags.was_withheld) {
        let Some(owner) = b.owner else { continue };
        mined += 1;
        if b.status != BlockStatus::Stale {
            continue;
        }
        if selfish[owner as usize] {
            attacker += 1;
        } else {
            honest += 1;
            let parent_stale = b
                .parent
                .is_some_and(|p| result.dag[p.index()].status == BlockStatus::Stale);
            if parent_stale {
                honest_child += 1;
            }
        }
    }
    if mined == 0 {
        return WasteSplit::default();
    }
    let frac = |n: u64| n as f64 / mined as f64;
    WasteSplit {
        attacker_stale_fraction: frac(attacker),
        honest_stale_fraction: frac(honest),
        honest_child_of_stale_fraction: frac(honest_child),
    }
}

/// Ids of cartel members in a result.
pub fn cartel_members(result: &SimResult) -> Vec<&MinerId> {
    result
        .miners
        .iter()
        .filter(|m| m.strategy.is_selfish())
        .map(|m| &m.id)
        .collect()
}
