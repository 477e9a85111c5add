//! Block tree records and the event-log CSV format.
//!
//! Columns: `id,height,owner,parent,status,published_at,flags`. `parent` and
//! `published_at` are empty for the genesis block and for blocks that never
//! reached the network; `flags` is a `|`-separated subset of
//! `withheld`, `secret`, `contested`. A minimal header with only
//! `height,owner,parent,status` is also accepted, in which case a row's id is
//! its zero-based position.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(pub u32);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockStatus {
    Main,
    Stale,
}

impl BlockStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockStatus::Main => "main",
            BlockStatus::Stale => "stale",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFlags {
    /// Found by a withholding infiltrator and destroyed.
    pub was_withheld: bool,
    /// Held back by a selfish cartel at some point.
    pub was_secret: bool,
    /// Another public block at the same or greater height existed when this
    /// one was published.
    pub contested: bool,
}

impl BlockFlags {
    pub fn encode(&self) -> String {
        let mut parts = Vec::new();
        if self.was_withheld {
            parts.push("withheld");
        }
        if self.was_secret {
            parts.push("secret");
        }
        if self.contested {
            parts.push("contested");
        }
        parts.join("|")
    }

    pub fn decode(s: &str) -> Result<Self> {
        let mut flags = BlockFlags::default();
        for part in s.split('|').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "withheld" => flags.was_withheld = true,
                "secret" => flags.was_secret = true,
                "contested" => flags.contested = true,
                other => return Err(Error::MalformedDag(format!("unknown flag `{other}`"))),
            }
        }
        Ok(flags)
    }
}

/// One block as recorded by the simulation engine. `owner` indexes the run's
/// miner list; `None` is the genesis block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEvent {
    pub id: BlockId,
    pub height: u32,
    pub owner: Option<u32>,
    pub parent: Option<BlockId>,
    /// Step index at which the block reached the network.
    pub published_at: Option<u32>,
    pub status: BlockStatus,
    pub flags: BlockFlags,
}

/// A block row as read from or written to CSV, with the owner as a name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRecord {
    pub id: u64,
    pub height: u64,
    pub owner: String,
    pub parent: Option<u64>,
    pub status: BlockStatus,
    pub published_at: Option<u64>,
    pub flags: BlockFlags,
}

/// Read-only view used by the DAG analyzers.
pub trait DagNode {
    fn node_id(&self) -> u64;
    fn node_height(&self) -> u64;
    fn node_parent(&self) -> Option<u64>;
    fn is_stale(&self) -> bool;
    fn is_withheld(&self) -> bool;
}

impl DagNode for BlockEvent {
    fn node_id(&self) -> u64 {
        self.id.0 as u64
    }
    fn node_height(&self) -> u64 {
        self.height as u64
    }
    fn node_parent(&self) -> Option<u64> {
        self.parent.map(|p| p.0 as u64)
    }
    fn is_stale(&self) -> bool {
        self.status == BlockStatus::Stale
    }
    fn is_withheld(&self) -> bool {
        self.flags.was_withheld
    }
}

impl DagNode for BlockRecord {
    fn node_id(&self) -> u64 {
        self.id
    }
    fn node_height(&self) -> u64 {
        self.height
    }
    fn node_parent(&self) -> Option<u64> {
        self.parent
    }
    fn is_stale(&self) -> bool {
        self.status == BlockStatus::Stale
    }
    fn is_withheld(&self) -> bool {
        self.flags.was_withheld
    }
}

pub const GENESIS_OWNER: &str = "genesis";

pub fn write_event_log<W: Write>(
    out: W,
    records: impl IntoIterator<Item = BlockRecord>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "height",
        "owner",
        "parent",
        "status",
        "published_at",
        "flags",
    ])?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.id.to_string(),
            r.height.to_string(),
            r.owner,
            opt(r.parent),
            r.status.as_str().to_owned(),
            opt(r.published_at),
            r.flags.encode(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_event_log<R: Read>(input: R) -> Result<Vec<BlockRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::MalformedDag(format!("missing column `{name}`")))
    };
    let (height_c, owner_c, parent_c, status_c) = (
        need("height")?,
        need("owner")?,
        need("parent")?,
        need("status")?,
    );
    let (id_c, pub_c, flags_c) = (col("id"), col("published_at"), col("flags"));

    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let num = |c: usize, what: &str| -> Result<Option<u64>> {
            let s = field(c);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::MalformedDag(format!("line {line}: bad {what} `{s}`")))
        };
        let id = match id_c {
            Some(c) => num(c, "id")?
                .ok_or_else(|| Error::MalformedDag(format!("line {line}: empty id")))?,
            None => row as u64,
        };
        let height = num(height_c, "height")?
            .ok_or_else(|| Error::MalformedDag(format!("line {line}: empty height")))?;
        let status = match field(status_c) {
            "main" => BlockStatus::Main,
            "stale" => BlockStatus::Stale,
            s => {
                return Err(Error::MalformedDag(format!(
                    "line {line}: bad status `{s}`"
                )))
            }
        };
        out.push(BlockRecord {
            id,
            height,
            owner: field(owner_c).to_owned(),
            parent: num(parent_c, "parent")?,
            status,
            published_at: pub_c.map(|c| num(c, "published_at")).transpose()?.flatten(),
            flags: flags_c
                .map(|c| BlockFlags::decode(field(c)))
                .transpose()?
                .unwrap_or_default(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_round_trip() {
        let f = BlockFlags {
            was_withheld: false,
            was_secret: true,
            contested: true,
        };
        assert_eq!(f.encode(), "secret|contested");
        assert_eq!(BlockFlags::decode("secret|contested").unwrap(), f);
        assert_eq!(BlockFlags::decode("").unwrap(), BlockFlags::default());
        assert!(BlockFlags::decode("lost").is_err());
    }

    #[test]
    fn minimal_header_uses_row_index_as_id() {
        let csv = "height,owner,parent,status\n0,genesis,,main\n1,a,0,main\n1,b,0,stale\n";
        let recs = read_event_log(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[2].id, 2);
        assert_eq!(recs[2].parent, Some(0));
        assert_eq!(recs[2].status, BlockStatus::Stale);
        assert_eq!(recs[0].parent, None);
    }

    #[test]
    fn full_log_round_trip() {
        let recs = vec![
            BlockRecord {
                id: 0,
                height: 0,
                owner: GENESIS_OWNER.into(),
                parent: None,
                status: BlockStatus::Main,
                published_at: None,
                flags: BlockFlags::default(),
            },
            BlockRecord {
                id: 1,
                height: 1,
                owner: "rogue".into(),
                parent: Some(0),
                status: BlockStatus::Stale,
                published_at: None,
                flags: BlockFlags {
                    was_withheld: true,
                    ..Default::default()
                },
            },
        ];
        let mut buf = Vec::new();
        write_event_log(&mut buf, recs.clone()).unwrap();
        assert_eq!(read_event_log(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn bad_rows_are_reported_with_line() {
        let csv = "height,owner,parent,status\n0,genesis,,main\nx,a,0,main\n";
        let err = read_event_log(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let csv = "height,owner,status\n";
        assert!(read_event_log(csv.as_bytes()).is_err());
    }
}
