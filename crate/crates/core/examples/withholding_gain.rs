//! Closed-form withholding premium next to a small Monte Carlo estimate.
use poolsim::withholding::{
    optimal_beta, relative_gain, simulate, WithholdParams, WithholdScenario,
};

fn main() -> poolsim::Result<()> {
    let alpha = 0.2;
    println!("beta   closed   simulated (+- se)");
    for beta in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let p = WithholdParams::new(alpha, beta)?;
        let est = simulate(&WithholdScenario::new(p), 50_000, 1, 8, None)?;
        println!(
            "{beta:<6} {:.4}   {:.4} (+- {:.4})",
            relative_gain(p)?,
            est.premium.mean,
            est.premium.se
        );
    }
    println!(
        "best split for alpha={alpha}: beta={}",
        optimal_beta(alpha)?
    );
    Ok(())
}
