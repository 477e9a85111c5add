use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use poolsim::detection::{
    analyze_dag, min_blocks_to_detect, write_table_csv, z_test_with, DetectionThresholds,
    ObservationWindow, TableRow,
};
use poolsim::scenario::{load_manifest, load_scenario, replay_manifest, run_scenario};
use poolsim::selfish::{profitability_threshold, simulate, SelfishParams};
use poolsim::withholding::{self, WithholdParams, WithholdScenario};
use poolsim::{dag, formulas, Error};

const DEFAULT_OUTPUT_DIR: &str = "poolsim-out";
const OUTPUT_DIR_ENV: &str = "POOLSIM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "poolsim", version, about = "Mining-pool strategy simulator")]
struct Cli {
    /// Worker threads for replicate batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file, or replay a seed manifest.
    Run {
        #[arg(required_unless_present = "manifest")]
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        manifest: Option<PathBuf>,
        /// Overrides the scenario's `output_dir`, then `POOLSIM_OUTPUT_DIR`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a named closed-form quantity; without a name, list them.
    Formulas {
        name: Option<String>,
        #[arg(allow_negative_numbers = true)]
        args: Vec<f64>,
    },
    /// Closed-form withholding premium.
    WithholdGain {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Monte Carlo withholding premium.
    WithholdSim {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        blocks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        pools: usize,
        #[arg(long, default_value_t = 1)]
        identities: usize,
        #[arg(long)]
        churn: bool,
    },
    /// Simulated selfish mining revenue.
    SelfishSim {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        blocks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        fork_punishment: Option<f64>,
    },
    /// Break-even cartel share for a given tie split.
    SelfishThreshold {
        #[arg(long)]
        ns: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// One-sided deficit test of an observed block count.
    Detect {
        #[arg(long)]
        expected: f64,
        #[arg(long)]
        observed: u64,
        #[arg(long, default_value = "subject")]
        label: String,
        #[arg(long, default_value_t = 2.0)]
        suspicious_z: f64,
        #[arg(long, default_value_t = 3.0)]
        detected_z: f64,
        /// Also report the expected blocks needed to detect this fraction.
        #[arg(long)]
        withhold_fraction: Option<f64>,
    },
    /// Wasted-block statistics of an event log or block-header CSV.
    AnalyzeDag {
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        window: u64,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::InvalidArgument { .. }
        | Error::UnknownFormula { .. }
        | Error::UnknownPool(_)
        | Error::Json(_) => 1,
        _ => 2,
    }
}

fn print_json<T: Serialize>(v: &T) -> poolsim::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn dispatch(cli: Cli) -> poolsim::Result<()> {
    let threads = cli.threads;
    match cli.cmd {
        Cmd::Run {
            scenario,
            manifest,
            output_dir,
            replicates,
            seed,
        } => {
            let report = if let Some(m) = manifest {
                let m = load_manifest(&m)?;
                let dir = out_dir(output_dir, m.scenario.output_dir.as_deref());
                replay_manifest(&m, &dir, threads)?
            } else {
                let mut s = load_scenario(scenario.as_deref().expect("required by clap"))?;
                if let Some(n) = replicates {
                    s.replicates = n;
                }
                if let Some(seed) = seed {
                    s.sim.seed = seed;
                }
                s.validate()?;
                let dir = out_dir(output_dir, s.output_dir.as_deref());
                run_scenario(&s, &dir, threads)?
            };
            print_json(&report.summary)
        }
        Cmd::Formulas { name: None, .. } => {
            for f in formulas::FORMULAS {
                println!("{:<22} {:<40} {}", f.name, f.args.join(" "), f.label);
            }
            Ok(())
        }
        Cmd::Formulas {
            name: Some(name),
            args,
        } => {
            let v = formulas::evaluate(&name, &args)?;
            println!("{}\t{}", v.value, v.label);
            Ok(())
        }
        Cmd::WithholdGain { alpha, beta } => {
            let p = WithholdParams::new(alpha, beta)?;
            print_json(&json!({
                "alpha": alpha,
                "beta": beta,
                "relative_gain": withholding::relative_gain(p)?,
                "private_branch_premium": withholding::private_branch_premium(p)?,
                "dilution_factor": withholding::dilution_factor(p)?,
                "in_pool_withhold_fraction": withholding::in_pool_withhold_fraction(p)?,
            }))
        }
        Cmd::WithholdSim {
            alpha,
            beta,
            blocks,
            seed,
            replicates,
            pools,
            identities,
            churn,
        } => {
            let scenario = WithholdScenario {
                public_pools: vec![1.0; pools.max(1)],
                honest_identities_per_pool: identities,
                infiltrator_identities_per_pool: identities,
                identity_churn: churn,
                ..WithholdScenario::new(WithholdParams::new(alpha, beta)?)
            };
            let est = withholding::simulate(&scenario, blocks, seed, replicates, threads)?;
            print_json(&json!({
                "alpha": alpha,
                "beta": beta,
                "blocks_per_replicate": blocks,
                "replicates": replicates,
                "seed": seed,
                "closed_form": est.closed_form,
                "premium": est.premium,
                "premium_ci95_half_width": est.premium.ci95(),
                "deviation_in_se": est.deviation_in_se(),
                "block_rate": est.block_rate,
            }))
        }
        Cmd::SelfishSim {
            alpha,
            gamma,
            blocks,
            seed,
            fork_punishment,
        } => {
            let p = SelfishParams::new(alpha, gamma)?;
            let o = simulate(p, blocks, seed, fork_punishment)?;
            let threshold = profitability_threshold(gamma)?;
            print_json(&json!({
                "alpha": alpha,
                "gamma": gamma,
                "blocks": blocks,
                "seed": seed,
                "fork_punishment": fork_punishment,
                "revenue_fraction": o.revenue_fraction,
                "premium": o.premium,
                "waste": o.waste,
                "threshold": threshold,
                "above_threshold": alpha > threshold,
            }))
        }
        Cmd::SelfishThreshold { ns, alpha } => {
            let t = profitability_threshold(ns)?;
            print_json(&json!({
                "ns": ns,
                "threshold": t,
                "profitable": alpha.map(|a| a > t),
            }))
        }
        Cmd::Detect {
            expected,
            observed,
            label,
            suspicious_z,
            detected_z,
            withhold_fraction,
        } => {
            let t = DetectionThresholds {
                suspicious_z,
                detected_z,
                ..Default::default()
            };
            let report = z_test_with(&ObservationWindow::new(label, expected, observed), &t)?;
            match withhold_fraction {
                None => print_json(&report),
                Some(w) => print_json(&json!({
                    "report": report,
                    "withhold_fraction": w,
                    "min_blocks_to_detect": min_blocks_to_detect(w, detected_z)?,
                })),
            }
        }
        Cmd::AnalyzeDag {
            input,
            window,
            json,
        } => {
            let records = dag::read_event_log(File::open(&input)?)?;
            let analysis = analyze_dag(&records, window)?;
            if json {
                print_json(&analysis)
            } else {
                let rows: Vec<TableRow> = analysis.windows.iter().map(TableRow::from).collect();
                write_table_csv(io::stdout().lock(), &rows)
            }
        }
    }
}

fn out_dir(flag: Option<PathBuf>, from_scenario: Option<&Path>) -> PathBuf {
    flag.or_else(|| from_scenario.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}
