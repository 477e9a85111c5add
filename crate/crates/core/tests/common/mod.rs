#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use poolsim::dag::{BlockFlags, BlockRecord, BlockStatus};
use rand::seq::SliceRandom;
use rand::Rng;

/// Closed-form cartel revenue share for selfish mining with tie split `gamma`.
pub fn selfish_revenue_oracle(alpha: f64, gamma: f64) -> f64 {
    let a = alpha;
    let num = a * (1.0 - a).powi(2) * (4.0 * a + gamma * (1.0 - 2.0 * a)) - a.powi(3);
    let den = 1.0 - a * (1.0 + (2.0 - a) * a);
    num / den
}

/// Random block tree: a main chain of `main_len` blocks above genesis plus
/// stale branches that never catch up with it. Some stale leaves are marked
/// withheld. Rows come back shuffled with non-sequential ids.
pub fn random_dag<R: Rng>(rng: &mut R, main_len: u64, branches: usize) -> Vec<BlockRecord> {
    let mut ids: Vec<u64> = (0..(main_len + 1 + 40 * branches as u64))
        .map(|i| i * 7 + 3)
        .collect();
    ids.shuffle(rng);
    let mut next = ids.into_iter();
    let mut out = Vec::new();

    let mut main_ids = Vec::new();
    for h in 0..=main_len {
        let id = next.next().unwrap();
        out.push(BlockRecord {
            id,
            height: h,
            owner: if h == 0 {
                "genesis".into()
            } else {
                format!("m{}", rng.random_range(0..5))
            },
            parent: main_ids.last().copied(),
            status: BlockStatus::Main,
            published_at: Some(h),
            flags: BlockFlags::default(),
        });
        main_ids.push(id);
    }

    for _ in 0..branches {
        if main_len < 2 {
            break;
        }
        let fork_at = rng.random_range(0..main_len - 1);
        let room = main_len - fork_at - 1;
        let len = rng.random_range(1..=room.min(4));
        let mut parent = main_ids[fork_at as usize];
        for k in 1..=len {
            let id = next.next().unwrap();
            let withheld = k == len && rng.random_bool(0.2);
            out.push(BlockRecord {
                id,
                height: fork_at + k,
                owner: format!("m{}", rng.random_range(0..5)),
                parent: Some(parent),
                status: BlockStatus::Stale,
                published_at: (!withheld).then_some(fork_at + k),
                flags: BlockFlags {
                    was_withheld: withheld,
                    ..Default::default()
                },
            });
            parent = id;
        }
    }
    out.shuffle(rng);
    out
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OracleWindow {
    pub mined: u64,
    pub wasted: u64,
    pub child_of_wasted: u64,
}

/// Recomputes the main chain from structure alone (walk down from the unique
/// highest published block), then classifies every counted block.
pub fn dag_oracle(nodes: &[BlockRecord], width: u64) -> BTreeMap<u64, OracleWindow> {
    let by_id: BTreeMap<u64, &BlockRecord> = nodes.iter().map(|n| (n.id, n)).collect();
    let tip = nodes
        .iter()
        .filter(|n| !n.flags.was_withheld)
        .max_by_key(|n| (n.height, n.status == BlockStatus::Main))
        .unwrap();
    let mut main = BTreeSet::new();
    let mut cur = Some(tip.id);
    while let Some(id) = cur {
        main.insert(id);
        cur = by_id[&id].parent;
    }
    let mut windows: BTreeMap<u64, OracleWindow> = BTreeMap::new();
    let max_h = nodes.iter().map(|n| n.height).max().unwrap();
    for w in 0..=max_h / width {
        windows.insert(w, OracleWindow::default());
    }
    for n in nodes {
        let Some(parent) = n.parent else { continue };
        if n.flags.was_withheld {
            continue;
        }
        let w = windows.get_mut(&(n.height / width)).unwrap();
        w.mined += 1;
        if !main.contains(&n.id) {
            w.wasted += 1;
            if !main.contains(&parent) {
                w.child_of_wasted += 1;
            }
        }
    }
    windows
}
