//! How many expected blocks an observer needs before a withholding deficit shows.
use poolsim::detection::{min_blocks_to_detect, pool_windows, z_test, ObservationWindow, Verdict};
use poolsim::sim::{replicate_seeds, run_replicates};
use poolsim::withholding::{WithholdParams, WithholdScenario};

fn main() -> poolsim::Result<()> {
    let desk = z_test(&ObservationWindow::new("single miner", 18.0, 16))?;
    println!(
        "{}: z={:.2} p={:.3} -> {:?}",
        desk.label, desk.z_score, desk.p_value, desk.verdict
    );

    for w in [0.5, 0.2, 1.0 / 9.0, 0.05] {
        println!(
            "withheld fraction {w:.3}: {:.0} expected blocks for 3 sigma",
            min_blocks_to_detect(w, 3.0)?
        );
    }

    // A pool with a ninth of its power withholding, watched until K = 729.
    let cfg = WithholdScenario::new(WithholdParams::new(0.2, 0.5)?).config(810, 0, 0)?;
    let verdicts = run_replicates(&cfg, &replicate_seeds(1, 500), None, |_, r| {
        z_test(&pool_windows(r)[0]).map(|t| t.verdict)
    })?;
    let hits = verdicts
        .into_iter()
        .filter(|v| matches!(v, Ok(Verdict::Detected)))
        .count();
    println!("detected in {hits} of 500 runs");
    Ok(())
}
