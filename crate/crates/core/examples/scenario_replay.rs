//! Run a bundled scenario, then replay it from its seed manifest on one thread.
use std::path::Path;

use poolsim::scenario::{
    load_manifest, load_scenario, replay_manifest, run_scenario, MANIFEST_FILE, SUMMARY_FILE,
};

fn main() -> poolsim::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/withholding_split.json");
    let scenario = load_scenario(&path)?;
    let out = std::env::temp_dir().join("poolsim-replay-example");
    let report = run_scenario(&scenario, &out.join("first"), None)?;
    if let Some(premium) = &report.summary.premium {
        println!(
            "premium {:.4} +- {:.4} (closed form {:?})",
            premium.mean, premium.ci95_half_width, report.summary.closed_form_premium
        );
    }

    let manifest = load_manifest(&out.join("first").join(MANIFEST_FILE))?;
    replay_manifest(&manifest, &out.join("replay"), Some(1))?;
    let same = std::fs::read(out.join("first").join(SUMMARY_FILE))?
        == std::fs::read(out.join("replay").join(SUMMARY_FILE))?;
    println!("replay identical: {same}");
    Ok(())
}
