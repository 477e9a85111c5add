//! Wasted-block statistics over a block tree, by height window.
//!
//! "Wasted" is every mined block that is not on the main chain; a
//! "child(wasted)" block is a wasted block whose parent is also wasted. Both
//! are reported as a percentage of all blocks mined in the window. Genesis and
//! blocks that never reached the network are not counted.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::dag::DagNode;
use crate::error::{Error, Result};

pub const TABLE_HEADER: [&str; 3] = ["blocks", "wasted", "child(wasted)"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WindowStats {
    pub start_height: u64,
    pub end_height: u64,
    pub mined: u64,
    pub wasted: u64,
    pub child_of_wasted: u64,
}

impl WindowStats {
    pub fn wasted_pct(&self) -> f64 {
        pct(self.wasted, self.mined)
    }

    pub fn child_of_wasted_pct(&self) -> f64 {
        pct(self.child_of_wasted, self.mined)
    }
}

fn pct(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DagAnalysis {
    pub windows: Vec<WindowStats>,
    pub total: WindowStats,
}

pub fn analyze_dag<N: DagNode>(nodes: &[N], window_width: u64) -> Result<DagAnalysis> {
    if window_width == 0 {
        return Err(Error::arg("window width", 0.0, "must be at least 1"));
    }
    let mut index: HashMap<u64, usize> = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.node_id(), i).is_some() {
            return Err(Error::MalformedDag(format!(
                "duplicate block id {}",
                n.node_id()
            )));
        }
    }

    let mut genesis = 0;
    let mut max_height = 0;
    for n in nodes {
        max_height = max_height.max(n.node_height());
        match n.node_parent() {
            None => {
                genesis += 1;
                if n.node_height() != 0 {
                    return Err(Error::MalformedDag(format!(
                        "block {} has no parent but height {}",
                        n.node_id(),
                        n.node_height()
                    )));
                }
            }
            Some(p) => {
                let Some(&pi) = index.get(&p) else {
                    return Err(Error::MalformedDag(format!(
                        "block {} references missing parent {p}",
                        n.node_id()
                    )));
                };
                if nodes[pi].node_height() + 1 != n.node_height() {
                    return Err(Error::MalformedDag(format!(
                        "block {} at height {} has parent {p} at height {}",
                        n.node_id(),
                        n.node_height(),
                        nodes[pi].node_height()
                    )));
                }
            }
        }
    }
    if genesis != 1 {
        return Err(Error::MalformedDag(format!(
            "expected one genesis block, found {genesis}"
        )));
    }

    let count = (max_height / window_width + 1) as usize;
    let mut windows: Vec<WindowStats> = (0..count as u64)
        .map(|w| WindowStats {
            start_height: w * window_width,
            end_height: (w + 1) * window_width - 1,
            ..Default::default()
        })
        .collect();

    for n in nodes {
        let Some(p) = n.node_parent() else { continue };
        if n.is_withheld() {
            continue;
        }
        let w = &mut windows[(n.node_height() / window_width) as usize];
        w.mined += 1;
        if n.is_stale() {
            w.wasted += 1;
            if nodes[index[&p]].is_stale() {
                w.child_of_wasted += 1;
            }
        }
    }

    let total = WindowStats {
        start_height: 0,
        end_height: windows.last().map_or(0, |w| w.end_height),
        mined: windows.iter().map(|w| w.mined).sum(),
        wasted: windows.iter().map(|w| w.wasted).sum(),
        child_of_wasted: windows.iter().map(|w| w.child_of_wasted).sum(),
    };
    Ok(DagAnalysis { windows, total })
}

/// One row in the three-column `blocks,wasted,child(wasted)` layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub blocks: String,
    pub wasted_pct: f64,
    pub child_of_wasted_pct: f64,
}

impl From<&WindowStats> for TableRow {
    fn from(w: &WindowStats) -> Self {
        TableRow {
            blocks: format!("{}-{}", w.start_height, w.end_height),
            wasted_pct: w.wasted_pct(),
            child_of_wasted_pct: w.child_of_wasted_pct(),
        }
    }
}

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.blocks.clone(),
            format!("{:.2}%", r.wasted_pct),
            format!("{:.2}%", r.child_of_wasted_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(input: R) -> Result<Vec<TableRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TABLE_HEADER {
        return Err(Error::MalformedDag(format!(
            "table header must be {:?}, got {:?}",
            TABLE_HEADER,
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let parse_pct = |s: &str, line: usize| -> Result<f64> {
        s.trim_end_matches('%')
            .trim()
            .parse()
            .map_err(|_| Error::MalformedDag(format!("line {line}: bad percentage `{s}`")))
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(TableRow {
            blocks: rec.get(0).unwrap_or("").to_owned(),
            wasted_pct: parse_pct(rec.get(1).unwrap_or(""), line)?,
            child_of_wasted_pct: parse_pct(rec.get(2).unwrap_or(""), line)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{BlockFlags, BlockRecord, BlockStatus};

    fn rec(id: u64, height: u64, parent: Option<u64>, stale: bool) -> BlockRecord {
        BlockRecord {
            id,
            height,
            owner: "m".into(),
            parent,
            status: if stale {
                BlockStatus::Stale
            } else {
                BlockStatus::Main
            },
            published_at: None,
            flags: BlockFlags::default(),
        }
    }

    fn chain(n: u64) -> Vec<BlockRecord> {
        (0..=n)
            .map(|i| rec(i, i, i.checked_sub(1), false))
            .collect()
    }

    #[test]
    fn linear_chain_has_no_waste() {
        let a = analyze_dag(&chain(100), 1000).unwrap();
        assert_eq!(a.total.mined, 100);
        assert_eq!(a.total.wasted_pct(), 0.0);
        assert_eq!(a.total.child_of_wasted_pct(), 0.0);
    }

    #[test]
    fn one_stale_leaf() {
        let mut dag = chain(100);
        dag.push(rec(101, 50, Some(49), true));
        let a = analyze_dag(&dag, 1000).unwrap();
        assert_eq!(a.total.mined, 101);
        assert!((a.total.wasted_pct() - 100.0 / 101.0).abs() < 1e-12);
        assert_eq!(a.total.child_of_wasted, 0);
    }

    #[test]
    fn stale_child_of_stale() {
        let mut dag = chain(10);
        dag.push(rec(11, 5, Some(4), true));
        dag.push(rec(12, 6, Some(11), true));
        let a = analyze_dag(&dag, 5).unwrap();
        assert_eq!(a.total.wasted, 2);
        assert_eq!(a.total.child_of_wasted, 1);
        assert_eq!(a.windows.len(), 3);
        assert_eq!(a.windows[1].wasted, 2);
        assert_eq!(a.windows[1].child_of_wasted, 1);
        assert_eq!((a.windows[1].start_height, a.windows[1].end_height), (5, 9));
    }

    #[test]
    fn withheld_blocks_are_not_counted() {
        let mut dag = chain(4);
        let mut w = rec(5, 2, Some(1), true);
        w.flags.was_withheld = true;
        dag.push(w);
        assert_eq!(analyze_dag(&dag, 10).unwrap().total.wasted, 0);
    }

    #[test]
    fn malformed_inputs() {
        let mut missing = chain(3);
        missing.push(rec(9, 2, Some(77), true));
        assert!(analyze_dag(&missing, 10).is_err());

        let mut wrong_height = chain(3);
        wrong_height.push(rec(9, 3, Some(1), true));
        assert!(analyze_dag(&wrong_height, 10).is_err());

        let mut two_genesis = chain(3);
        two_genesis.push(rec(9, 0, None, true));
        assert!(analyze_dag(&two_genesis, 10).is_err());

        let mut dup = chain(3);
        dup.push(rec(2, 2, Some(1), true));
        assert!(analyze_dag(&dup, 10).is_err());

        assert!(analyze_dag(&chain(3), 0).is_err());
    }

    #[test]
    fn table_round_trip() {
        let rows = vec![TableRow {
            blocks: "0-9999".into(),
            wasted_pct: 0.21,
            child_of_wasted_pct: 0.0,
        }];
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "blocks,wasted,child(wasted)\n0-9999,0.21%,0.00%\n");
        assert_eq!(read_table_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_table_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
