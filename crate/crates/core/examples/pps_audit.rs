//! Check a published pay-per-share rate, then audit a pool under attack.
use poolsim::detection::{consistency_audit, DEFAULT_AUDIT_TOLERANCE};
use poolsim::pool::{pps_rate_check, PoolConfig, RewardScheme};
use poolsim::sim::run;
use poolsim::withholding::{WithholdParams, WithholdScenario};
use poolsim::{Difficulty, PoolId};

fn main() -> poolsim::Result<()> {
    let d = Difficulty::new(1_418_481_395.0)?;
    println!(
        "published rate implies {:.3} BTC per block",
        pps_rate_check(d, 1.630_264_60e-8)?
    );

    let mut cfg = WithholdScenario::new(WithholdParams::new(0.2, 0.5)?).config(20_000, 9, 0)?;
    let shares = cfg.share_difficulty_ratio as f64;
    let reward = cfg.reward_per_block.to_btc();
    let pool = PoolConfig {
        id: PoolId::new("public-0"),
        fee_fraction: 0.0,
        reward_scheme: RewardScheme::PayPerShare {
            rate: reward / shares,
        },
    };
    cfg.pools = vec![pool.clone()];
    let result = run(&cfg)?;
    let report = consistency_audit(
        &pool,
        &result.pools[&pool.id],
        Difficulty::new(shares)?,
        reward,
        DEFAULT_AUDIT_TOLERANCE,
    )?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    println!(
        "operator balance: {} sat",
        result.operator_balance[&pool.id]
    );
    Ok(())
}
