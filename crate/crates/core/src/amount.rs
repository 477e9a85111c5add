//! Fixed-point bitcoin amounts.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SATS_PER_BTC: u64 = 100_000_000;

/// An amount of bitcoin held as an integer number of satoshis.
///
/// Serialized as a decimal BTC number so configs read naturally
/// (`"reward_per_block": 25.0`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_sat(sat: u64) -> Self {
        Amount(sat)
    }

    pub const fn from_btc_int(btc: u64) -> Self {
        Amount(btc * SATS_PER_BTC)
    }

    /// Rounds to the nearest satoshi. Negative or non-finite inputs map to zero.
    pub fn from_btc(btc: f64) -> Self {
        if !btc.is_finite() || btc <= 0.0 {
            return Amount::ZERO;
        }
        Amount((btc * SATS_PER_BTC as f64).round() as u64)
    }

    pub const fn to_sat(self) -> u64 {
        self.0
    }

    pub fn to_btc(self) -> f64 {
        self.0 as f64 / SATS_PER_BTC as f64
    }

    /// `self × factor`, rounded to the nearest satoshi.
    pub fn scale(self, factor: f64) -> Self {
        Amount((self.0 as f64 * factor).round().max(0.0) as u64)
    }

    pub fn checked_sub(self, other: Amount) -> Option<Amount> {
        self.0.checked_sub(other.0).map(Amount)
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0 + rhs.0)
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        self.0 += rhs.0;
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0 - rhs.0)
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:08} BTC",
            self.0 / SATS_PER_BTC,
            self.0 % SATS_PER_BTC
        )
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_btc())
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let btc = f64::deserialize(d)?;
        if !btc.is_finite() || btc < 0.0 {
            return Err(serde::de::Error::custom(
                "amount must be a non-negative BTC value",
            ));
        }
        Ok(Amount::from_btc(btc))
    }
}
