//! Named closed-form quantities, callable by name from the command line.

use serde::Serialize;

use crate::detection::{detectability_gain, min_blocks_to_detect};
use crate::error::{Error, Result};
use crate::model::{expected_blocks, mining_distribution, Difficulty, Hashrate};
use crate::pool::pps_rate_check;
use crate::selfish::profitability_threshold;
use crate::withholding::{
    dilution_factor, in_pool_withhold_fraction, optimal_beta, private_branch_premium,
    relative_gain, WithholdParams,
};

#[derive(Debug, Clone, Copy)]
pub struct Formula {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub label: &'static str,
    eval: fn(&[f64]) -> Result<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaValue {
    pub name: String,
    pub args: Vec<f64>,
    pub value: f64,
    pub label: String,
}

fn wp(a: &[f64]) -> Result<WithholdParams> {
    WithholdParams::new(a[0], a[1])
}

pub const FORMULAS: &[Formula] = &[
    Formula {
        name: "withhold-gain",
        args: &["alpha", "beta"],
        label: "withholding premium αβ(1−β)/(1−α)",
        eval: |a| relative_gain(wp(a)?),
    },
    Formula {
        name: "private-premium",
        args: &["alpha", "beta"],
        label: "private-branch premium (1−α(1−β))/(1−α) − 1",
        eval: |a| private_branch_premium(wp(a)?),
    },
    Formula {
        name: "dilution",
        args: &["alpha", "beta"],
        label: "pool payout dilution (1−α)/(1−α(1−β))",
        eval: |a| dilution_factor(wp(a)?),
    },
    Formula {
        name: "withheld-fraction",
        args: &["alpha", "beta"],
        label: "withheld fraction of pool power αβ/(1−α(1−β))",
        eval: |a| in_pool_withhold_fraction(wp(a)?),
    },
    Formula {
        name: "optimal-beta",
        args: &["alpha"],
        label: "premium-maximizing infiltration split, grid step 0.01",
        eval: |a| optimal_beta(a[0]),
    },
    Formula {
        name: "selfish-threshold",
        args: &["ns"],
        label: "selfish mining break-even share (1−ns)/(3−2ns)",
        eval: |a| profitability_threshold(a[0]),
    },
    Formula {
        name: "mining-mean",
        args: &["k"],
        label: "mean block count K",
        eval: |a| Ok(mining_distribution(a[0])?.mean()),
    },
    Formula {
        name: "mining-std",
        args: &["k"],
        label: "block count standard deviation √K",
        eval: |a| Ok(mining_distribution(a[0])?.stddev()),
    },
    Formula {
        name: "mining-rel-std",
        args: &["k"],
        label: "relative standard deviation 1/√K",
        eval: |a| Ok(mining_distribution(a[0])?.relative_stddev()),
    },
    Formula {
        name: "expected-blocks",
        args: &["terahashes", "difficulty", "seconds"],
        label: "expected blocks h·t/(d·2³²)",
        eval: |a| expected_blocks(Hashrate::terahashes(a[0])?, Difficulty::new(a[1])?, a[2]),
    },
    Formula {
        name: "pps-block-payout",
        args: &["difficulty", "rate"],
        label: "implied per-block payout difficulty × PPS rate",
        eval: |a| pps_rate_check(Difficulty::new(a[0])?, a[1]),
    },
    Formula {
        name: "min-blocks-to-detect",
        args: &["withhold_fraction", "z"],
        label: "expected blocks for a z-sigma deficit (z/w)²",
        eval: |a| min_blocks_to_detect(a[0], a[1]),
    },
    Formula {
        name: "detectability-gain",
        args: &["rate_multiplier"],
        label: "shrink factor of the detectable fraction √m",
        eval: |a| detectability_gain(a[0]),
    },
];

pub fn lookup(name: &str) -> Result<&'static Formula> {
    FORMULAS
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFormula {
            name: name.to_owned(),
            available: FORMULAS
                .iter()
                .map(|f| f.name)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

pub fn evaluate(name: &str, args: &[f64]) -> Result<FormulaValue> {
    let f = lookup(name)?;
    if args.len() != f.args.len() {
        return Err(Error::config(
            name,
            format!("expects {} argument(s): {}", f.args.len(), f.args.join(" ")),
        ));
    }
    Ok(FormulaValue {
        name: f.name.to_owned(),
        args: args.to_vec(),
        value: (f.eval)(args)?,
        label: f.label.to_owned(),
    })
}
