use poolsim::detection::{consistency_audit, Verdict, DEFAULT_AUDIT_TOLERANCE};
use poolsim::pool::{PoolConfig, RewardScheme};
use poolsim::sim::run;
use poolsim::withholding::{
    dilution_factor, outcome, per_share_payouts, relative_gain, simulate, WithholdParams,
    WithholdScenario,
};
use poolsim::{Difficulty, PoolId};

fn params(a: f64, b: f64) -> WithholdParams {
    WithholdParams::new(a, b).unwrap()
}

#[test]
fn infiltrators_and_members_earn_the_same_per_share() {
    let s = WithholdScenario {
        honest_identities_per_pool: 3,
        infiltrator_identities_per_pool: 2,
        ..WithholdScenario::new(params(0.3, 0.5))
    };
    let r = run(&s.config(20_000, 1, 0).unwrap()).unwrap();
    let payouts = per_share_payouts(&r, &WithholdScenario::pool_id(0));
    assert_eq!(payouts.len(), 5);
    let first = payouts[0].1;
    for (_, p) in &payouts {
        // Largest-remainder rounding moves at most one satoshi per member.
        assert!((p - first).abs() <= 1e-9 * first, "{payouts:?}");
    }
}

#[test]
fn spreading_over_pools_keeps_the_premium() {
    let one = WithholdScenario::new(params(0.2, 0.5));
    let three = WithholdScenario {
        public_pools: vec![0.5, 0.3, 0.2],
        ..one.clone()
    };
    for s in [one, three] {
        let est = simulate(&s, 100_000, 77, 40, None).unwrap();
        assert!(
            est.deviation_in_se() < 3.0,
            "{:?} {:?}",
            s.public_pools,
            est.premium
        );
    }
}

#[test]
fn rogue_revenue_matches_closed_form_fraction() {
    let p = params(0.3, 0.25);
    let r = run(&WithholdScenario::new(p).config(400_000, 5, 0).unwrap()).unwrap();
    let o = outcome(&r);
    let expected = p.alpha * (1.0 + relative_gain(p).unwrap())
        / (p.alpha * (1.0 + relative_gain(p).unwrap()) + (1.0 - p.alpha));
    assert!((o.rogue_revenue_fraction - expected).abs() < 0.004, "{o:?}");
    assert!((o.block_rate - (1.0 - p.infiltrating_power())).abs() < 0.004);
}

#[test]
fn attacked_pps_pool_fails_the_audit() {
    let p = params(0.2, 0.5);
    let mut cfg = WithholdScenario::new(p).config(50_000, 3, 0).unwrap();
    let shares_per_block = cfg.share_difficulty_ratio as f64;
    let fair_rate = cfg.reward_per_block.to_btc() / shares_per_block;
    let pool = PoolConfig {
        id: PoolId::new("public-0"),
        fee_fraction: 0.0,
        reward_scheme: RewardScheme::PayPerShare { rate: fair_rate },
    };
    cfg.pools = vec![pool.clone()];
    let r = run(&cfg).unwrap();
    let ledger = &r.pools[&pool.id];
    let report = consistency_audit(
        &pool,
        ledger,
        Difficulty::new(shares_per_block).unwrap(),
        cfg.reward_per_block.to_btc(),
        DEFAULT_AUDIT_TOLERANCE,
    )
    .unwrap();
    let ratio = report.realized_ratio.unwrap();
    let oracle = dilution_factor(p).unwrap();
    assert!((ratio - oracle).abs() < 0.01, "{ratio} vs {oracle}");
    assert!(report.payout_gap.abs() < 1e-9);
    assert_eq!(report.block_test.unwrap().verdict, Verdict::Detected);
    assert!(report.flagged);
    // The operator pays for shares that never turn into blocks.
    assert!(r.operator_balance[&pool.id] < 0);
}

#[test]
fn no_infiltration_means_no_premium() {
    let est = simulate(&WithholdScenario::new(params(0.2, 0.0)), 50_000, 2, 6, None).unwrap();
    assert_eq!(est.closed_form, 0.0);
    assert!(est.deviation_in_se() < 4.0);
    assert!(est.block_rate.mean == 1.0);
}
