use std::collections::BTreeMap;
use std::io::Write;

use crate::amount::Amount;
use crate::dag::{self, BlockEvent, BlockRecord, BlockStatus, GENESIS_OWNER};
use crate::error::Result;
use crate::ids::{MinerId, PoolId};
use crate::pool::PoolLedger;

use super::config::MinerSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub miners: Vec<MinerSpec>,
    /// Every block ever created, genesis first; `dag[i].id == i`.
    pub dag: Vec<BlockEvent>,
    /// Final payout per miner after pool settlement.
    pub revenue: BTreeMap<MinerId, Amount>,
    pub pools: BTreeMap<PoolId, PoolLedger>,
    /// Fees kept, or PPS profit/loss, per pool in satoshis.
    pub operator_balance: BTreeMap<PoolId, i64>,
    pub opportunities: u64,
    /// Main-chain blocks excluding genesis.
    pub main_blocks: u64,
    /// Published or secret blocks that did not make the main chain.
    pub stale_count: u64,
    pub withheld_count: u64,
    pub contested_main_blocks: u64,
    /// Block rewards credited, after any fork punishment.
    pub distributed: Amount,
    pub reward_per_block: Amount,
    /// Expected shares per block.
    pub shares_per_block: u64,
}

impl SimResult {
    pub fn revenue_of(&self, miner: &MinerId) -> Amount {
        self.revenue.get(miner).copied().unwrap_or_default()
    }

    /// Sum of miner payouts. Equals [`Self::distributed`] minus what pool
    /// operators kept.
    pub fn total_revenue(&self) -> Amount {
        self.revenue.values().copied().sum()
    }

    pub fn operator_total(&self) -> i64 {
        self.operator_balance.values().sum()
    }

    pub fn share_ledger(&self) -> BTreeMap<(PoolId, MinerId), u64> {
        self.pools
            .iter()
            .flat_map(|(p, l)| {
                l.shares
                    .iter()
                    .map(move |(m, &s)| ((p.clone(), m.clone()), s))
            })
            .collect()
    }

    pub fn main_blocks_by_miner(&self) -> BTreeMap<MinerId, u64> {
        let mut counts: BTreeMap<MinerId, u64> =
            self.miners.iter().map(|m| (m.id.clone(), 0)).collect();
        for b in &self.dag {
            if let (BlockStatus::Main, Some(o)) = (b.status, b.owner) {
                *counts
                    .get_mut(&self.miners[o as usize].id)
                    .expect("known miner") += 1;
            }
        }
        counts
    }

    pub fn owner_name(&self, b: &BlockEvent) -> &str {
        match b.owner {
            Some(o) => self.miners[o as usize].id.as_str(),
            None => GENESIS_OWNER,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = BlockRecord> + '_ {
        self.dag.iter().map(|b| BlockRecord {
            id: b.id.0 as u64,
            height: b.height as u64,
            owner: self.owner_name(b).to_owned(),
            parent: b.parent.map(|p| p.0 as u64),
            status: b.status,
            published_at: b.published_at.map(u64::from),
            flags: b.flags,
        })
    }

    pub fn write_event_log<W: Write>(&self, out: W) -> Result<()> {
        dag::write_event_log(out, self.records())
    }
}
