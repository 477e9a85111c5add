//! Scenario files: a simulation, an optional attack, and a replicate batch.
//!
//! A run writes three files into the output directory:
//!
//! * `summary.json`, the aggregated statistics;
//! * `replicates.csv`, one row per replicate;
//! * `seeds.json`, a manifest holding the scenario and every replicate seed.
//!
//! Feeding the manifest back to [`replay_manifest`] rewrites all three files
//! byte for byte, whatever the thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{pool_windows, z_test_with, DetectionThresholds, Verdict};
use crate::error::{Error, Result};
use crate::selfish::{self, profitability_threshold, selfish_config, SelfishParams};
use crate::sim::{replicate_seeds, run_replicates_with, SimConfig, SimResult};
use crate::stats::Summary;
use crate::withholding::{self, relative_gain, WithholdScenario};

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPLICATES_FILE: &str = "replicates.csv";
pub const MANIFEST_FILE: &str = "seeds.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Attack {
    Withholding(WithholdScenario),
    Selfish(SelfishParams),
}

impl Attack {
    pub fn family(&self) -> &'static str {
        match self {
            Attack::Withholding(_) => "withholding",
            Attack::Selfish(_) => "selfish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// With an attack, `miners` and `pools` must be empty: the attack builds
    /// the population and the remaining fields apply to it.
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<Attack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionThresholds>,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        if let Some(t) = &self.detection {
            t.validate()?;
        }
        if let Some(attack) = &self.attack {
            if !self.sim.miners.is_empty() || !self.sim.pools.is_empty() {
                return Err(Error::config(
                    "sim.miners",
                    "must be empty when an attack generates the population",
                ));
            }
            if let Attack::Selfish(p) = attack {
                if self.sim.gamma != 0.0 && self.sim.gamma != p.gamma {
                    return Err(Error::config(
                        "sim.gamma",
                        "conflicts with attack.selfish.gamma; set it in one place",
                    ));
                }
            }
        }
        self.config_for(0, self.sim.seed)?.validate()
    }

    /// Simulation config of replicate `index`, run with `seed`.
    pub fn config_for(&self, index: usize, seed: u64) -> Result<SimConfig> {
        let base = &self.sim;
        let generated = match &self.attack {
            None => {
                return Ok(SimConfig {
                    seed,
                    ..base.clone()
                })
            }
            Some(Attack::Withholding(w)) => w.config(base.total_blocks, seed, index as u64)?,
            Some(Attack::Selfish(p)) => {
                selfish_config(*p, base.total_blocks, seed, base.fork_punishment)?
            }
        };
        Ok(SimConfig {
            miners: generated.miners,
            pools: generated.pools,
            gamma: generated.gamma,
            seed,
            ..base.clone()
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        replicate_seeds(self.sim.seed, self.replicates)
    }

    pub fn thresholds(&self) -> DetectionThresholds {
        self.detection.unwrap_or_default()
    }
}

/// Loads and validates a scenario. Parse errors carry the line and column;
/// validation errors are anchored to the line where the offending key first
/// appears.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    parse_scenario(&text, path)
}

pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| {
        Error::config(
            format!("{}:{}:{}", origin.display(), e.line(), e.column()),
            e.to_string(),
        )
    })?;
    s.validate().map_err(|e| anchor(e, text, origin))?;
    Ok(s)
}

fn anchor(e: Error, text: &str, origin: &Path) -> Error {
    let (key, message) = match &e {
        Error::Config { path, message } => (path.clone(), message.clone()),
        Error::InvalidArgument { name, .. } => (name.to_string(), e.to_string()),
        _ => return e,
    };
    let line = locate_key(text, &key).unwrap_or(1);
    Error::config(
        format!("{}:{line}", origin.display()),
        format!("`{key}`: {message}"),
    )
}

/// Line of `a.b[2].c`, found by looking for each key in turn after the
/// previous one. Array indices are ignored.
fn locate_key(text: &str, path: &str) -> Option<usize> {
    let mut pos = 0;
    let mut found = false;
    for seg in path.split('.') {
        let key = seg.split('[').next().unwrap_or(seg).replace(' ', "_");
        if let Some(off) = text[pos..].find(&format!("\"{key}\"")) {
            pos += off;
            found = true;
        }
    }
    found.then(|| text[..pos].matches('\n').count() + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub main_blocks: u64,
    pub stale_blocks: u64,
    pub withheld_blocks: u64,
    pub attacker_power: f64,
    pub attacker_revenue_fraction: f64,
    pub premium: Option<f64>,
    /// Largest per-pool deficit z-score, if there are pools.
    pub max_pool_z: Option<f64>,
    pub max_pool_z_pool: Option<String>,
    pub pools_detected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub ci95_half_width: f64,
}

impl Stat {
    fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let s = Summary::of(xs);
        Some(Stat {
            mean: s.mean,
            sd: s.sd,
            se: s.se,
            ci95_half_width: s.ci95(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolDetection {
    pub pool: String,
    pub z_score: Stat,
    /// Fraction of replicates with a "detected" verdict.
    pub detection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub attack: Option<&'static str>,
    pub replicates: usize,
    pub blocks_per_replicate: u64,
    pub master_seed: u64,
    pub attacker_power: f64,
    pub attacker_revenue_fraction: Option<Stat>,
    pub premium: Option<Stat>,
    /// Closed-form premium for withholding scenarios.
    pub closed_form_premium: Option<f64>,
    /// Break-even cartel share for selfish scenarios, and whether the cartel
    /// is above it.
    pub profitability_threshold: Option<f64>,
    pub above_threshold: Option<bool>,
    pub stale_rate: Option<Stat>,
    pub pools: Vec<PoolDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub summary: ScenarioSummary,
    pub rows: Vec<ReplicateRow>,
    pub manifest: SeedManifest,
}

/// Runs every replicate and aggregates, without touching the filesystem.
pub fn execute(s: &Scenario, seeds: &[u64], threads: Option<usize>) -> Result<ScenarioReport> {
    s.validate()?;
    if seeds.len() != s.replicates {
        return Err(Error::config(
            "seeds",
            format!("{} seeds for {} replicates", seeds.len(), s.replicates),
        ));
    }
    let thresholds = s.thresholds();
    let per_rep = run_replicates_with(
        seeds,
        threads,
        |i, seed| s.config_for(i, seed),
        |i, r| summarize(s, &thresholds, i, seeds[i], r),
    )?;
    let mut rows = Vec::with_capacity(per_rep.len());
    let mut pool_z: Vec<Vec<(f64, bool)>> = Vec::new();
    let mut pool_names: Vec<String> = Vec::new();
    for rep in per_rep {
        let (row, zs) = rep?;
        if pool_names.is_empty() {
            pool_names = zs.iter().map(|(p, _, _)| p.clone()).collect();
            pool_z = vec![Vec::new(); pool_names.len()];
        }
        for (slot, (_, z, detected)) in pool_z.iter_mut().zip(zs) {
            slot.push((z, detected));
        }
        rows.push(row);
    }
    let summary = aggregate(s, &rows, &pool_names, &pool_z)?;
    Ok(ScenarioReport {
        summary,
        rows,
        manifest: SeedManifest {
            scenario: s.clone(),
            seeds: seeds.to_vec(),
        },
    })
}

type PoolZ = Vec<(String, f64, bool)>;

fn summarize(
    s: &Scenario,
    thresholds: &DetectionThresholds,
    replicate: usize,
    seed: u64,
    r: &SimResult,
) -> Result<(ReplicateRow, PoolZ)> {
    let (attacker_power, attacker_revenue_fraction, premium) = match &s.attack {
        Some(Attack::Selfish(p)) => {
            let o = selfish::outcome(*p, r);
            (p.alpha, o.revenue_fraction, Some(o.premium))
        }
        _ => {
            let power: f64 = r
                .miners
                .iter()
                .filter(|m| is_attacker(m))
                .map(|m| m.power_fraction)
                .sum();
            if power > 0.0 {
                let o = withholding::outcome(r);
                (o.rogue_power, o.rogue_revenue_fraction, Some(o.premium))
            } else {
                (0.0, 0.0, None)
            }
        }
    };

    let mut zs = Vec::new();
    for w in pool_windows(r) {
        let report = z_test_with(&w, thresholds)?;
        zs.push((w.label, report.z_score, report.verdict == Verdict::Detected));
    }
    let max = zs
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, z, _)| (p.clone(), *z));

    Ok((
        ReplicateRow {
            replicate,
            seed,
            main_blocks: r.main_blocks,
            stale_blocks: r.stale_count,
            withheld_blocks: r.withheld_count,
            attacker_power,
            attacker_revenue_fraction,
            premium,
            max_pool_z: max.as_ref().map(|m| m.1),
            max_pool_z_pool: max.map(|m| m.0),
            pools_detected: zs.iter().filter(|z| z.2).count() as u64,
        },
        zs,
    ))
}

fn is_attacker(m: &crate::sim::MinerSpec) -> bool {
    withholding::is_rogue(m) || m.strategy.is_selfish()
}

fn aggregate(
    s: &Scenario,
    rows: &[ReplicateRow],
    pool_names: &[String],
    pool_z: &[Vec<(f64, bool)>],
) -> Result<ScenarioSummary> {
    let premiums: Vec<f64> = rows.iter().filter_map(|r| r.premium).collect();
    let attacked = !premiums.is_empty();
    let fractions: Vec<f64> = rows.iter().map(|r| r.attacker_revenue_fraction).collect();
    let stale: Vec<f64> = rows
        .iter()
        .map(|r| r.stale_blocks as f64 / (r.main_blocks + r.stale_blocks).max(1) as f64)
        .collect();
    let (closed_form_premium, profitability, above) = match &s.attack {
        Some(Attack::Withholding(w)) => (Some(relative_gain(w.params)?), None, None),
        Some(Attack::Selfish(p)) => {
            let t = profitability_threshold(p.gamma)?;
            (None, Some(t), Some(p.alpha > t))
        }
        None => (None, None, None),
    };
    Ok(ScenarioSummary {
        name: s.name.clone(),
        attack: s.attack.as_ref().map(Attack::family),
        replicates: rows.len(),
        blocks_per_replicate: s.sim.total_blocks,
        master_seed: s.sim.seed,
        attacker_power: rows.first().map_or(0.0, |r| r.attacker_power),
        attacker_revenue_fraction: if attacked { Stat::of(&fractions) } else { None },
        premium: Stat::of(&premiums),
        closed_form_premium,
        profitability_threshold: profitability,
        above_threshold: above,
        stale_rate: Stat::of(&stale),
        pools: pool_names
            .iter()
            .zip(pool_z)
            .map(|(name, zs)| PoolDetection {
                pool: name.clone(),
                z_score: Stat::of(&zs.iter().map(|z| z.0).collect::<Vec<_>>())
                    .expect("one entry per replicate"),
                detection_rate: zs.iter().filter(|z| z.1).count() as f64 / zs.len() as f64,
            })
            .collect(),
    })
}

impl ScenarioReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut summary = serde_json::to_string_pretty(&self.summary)?;
        summary.push('\n');
        fs::write(dir.join(SUMMARY_FILE), summary)?;

        let mut w = csv::Writer::from_path(dir.join(REPLICATES_FILE))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;

        let mut manifest = serde_json::to_string_pretty(&self.manifest)?;
        manifest.push('\n');
        fs::write(dir.join(MANIFEST_FILE), manifest)?;
        Ok(())
    }
}

/// Runs a scenario with seeds derived from its master seed and writes the
/// report files into `dir`.
pub fn run_scenario(s: &Scenario, dir: &Path, threads: Option<usize>) -> Result<ScenarioReport> {
    let report = execute(s, &s.seeds(), threads)?;
    report.write(dir)?;
    Ok(report)
}

pub fn load_manifest(path: &Path) -> Result<SeedManifest> {
    let text = fs::read_to_string(path)?;
    let m: SeedManifest = serde_json::from_str(&text).map_err(|e| {
        Error::config(
            format!("{}:{}:{}", path.display(), e.line(), e.column()),
            e.to_string(),
        )
    })?;
    m.scenario.validate().map_err(|e| anchor(e, &text, path))?;
    Ok(m)
}

/// Reruns the exact replicates recorded in a manifest.
pub fn replay_manifest(
    m: &SeedManifest,
    dir: &Path,
    threads: Option<usize>,
) -> Result<ScenarioReport> {
    let report = execute(&m.scenario, &m.seeds, threads)?;
    report.write(dir)?;
    Ok(report)
}
