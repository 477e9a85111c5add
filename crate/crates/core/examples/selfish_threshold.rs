//! Where selfish mining starts to pay, by tie-break share gamma.
use poolsim::selfish::{profitability_threshold, simulate, SelfishParams};

fn main() -> poolsim::Result<()> {
    for gamma in [0.0, 0.5, 1.0] {
        let t = profitability_threshold(gamma)?;
        println!("gamma={gamma}: threshold alpha={t:.4}");
        for alpha in [0.1, 0.2, 0.3, 0.4] {
            let o = simulate(SelfishParams::new(alpha, gamma)?, 200_000, 42, None)?;
            println!(
                "  alpha={alpha}: revenue {:.4} premium {:+.4} honest stale {:.3}",
                o.revenue_fraction, o.premium, o.waste.honest_stale_fraction
            );
        }
    }
    Ok(())
}
