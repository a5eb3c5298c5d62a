//! Fixed-point Ether amounts.
//!
//! Amounts are stored as signed wei (10^-18 Eth) so that jewel prices, fees
//! and auction prices add up exactly. Profits can be negative, balances are
//! checked by their owners.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const WEI_PER_ETH: i128 = 1_000_000_000_000_000_000;
const DECIMALS: usize = 18;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eth(i128);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid Eth amount {0:?}")]
pub struct ParseEthError(pub String);

impl Eth {
    pub const ZERO: Eth = Eth(0);

    pub const fn from_wei(wei: i128) -> Self {
        Eth(wei)
    }

    pub const fn wei(self) -> i128 {
        self.0
    }

    pub const fn whole(eth: i64) -> Self {
        Eth(eth as i128 * WEI_PER_ETH)
    }

    /// Amount in thousandths of an Eth, e.g. `from_milli(8)` is the breeding fee.
    pub const fn from_milli(milli: i64) -> Self {
        Eth(milli as i128 * (WEI_PER_ETH / 1000))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / WEI_PER_ETH as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn times(self, n: i128) -> Self {
        Eth(self.0 * n)
    }

    /// Division by a positive integer, rounding toward negative infinity.
    pub fn div_floor(self, n: i128) -> Self {
        assert!(n > 0, "divisor must be positive");
        Eth(self.0.div_euclid(n))
    }

    pub fn checked_sub(self, other: Eth) -> Option<Eth> {
        self.0.checked_sub(other.0).map(Eth)
    }
}

impl Add for Eth {
    type Output = Eth;
    fn add(self, rhs: Eth) -> Eth {
        Eth(self.0 + rhs.0)
    }
}

impl AddAssign for Eth {
    fn add_assign(&mut self, rhs: Eth) {
        self.0 += rhs.0;
    }
}

impl Sub for Eth {
    type Output = Eth;
    fn sub(self, rhs: Eth) -> Eth {
        Eth(self.0 - rhs.0)
    }
}

impl SubAssign for Eth {
    fn sub_assign(&mut self, rhs: Eth) {
        self.0 -= rhs.0;
    }
}

impl Neg for Eth {
    type Output = Eth;
    fn neg(self) -> Eth {
        Eth(-self.0)
    }
}

impl Sum for Eth {
    fn sum<I: Iterator<Item = Eth>>(iter: I) -> Eth {
        iter.fold(Eth::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Eth> for Eth {
    fn sum<I: Iterator<Item = &'a Eth>>(iter: I) -> Eth {
        iter.copied().sum()
    }
}

impl fmt::Display for Eth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / WEI_PER_ETH as u128;
        let frac = abs % WEI_PER_ETH as u128;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:018}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Eth {
    type Err = ParseEthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseEthError(s.to_string());
        let trimmed = s.trim();
        let (negative, body) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if frac_part.len() > DECIMALS
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let whole: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac: i128 = 0;
        for (pos, b) in frac_part.bytes().enumerate() {
            frac += (b - b'0') as i128 * 10i128.pow((DECIMALS - 1 - pos) as u32);
        }
        let wei = whole
            .checked_mul(WEI_PER_ETH)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Eth(if negative { -wei } else { wei }))
    }
}

impl Serialize for Eth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

struct EthVisitor;

impl Visitor<'_> for EthVisitor {
    type Value = Eth;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an Eth amount as a decimal string or number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Eth, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Eth, E> {
        Ok(Eth(v as i128 * WEI_PER_ETH))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Eth, E> {
        Ok(Eth(v as i128 * WEI_PER_ETH))
    }

    // The shortest round-trip rendering of a float is the decimal the user wrote.
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Eth, E> {
        if !v.is_finite() {
            return Err(E::custom("non-finite Eth amount"));
        }
        format!("{v}").parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Eth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Eth, D::Error> {
        deserializer.deserialize_any(EthVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_decimals() {
        assert_eq!("14.4".parse::<Eth>().unwrap(), Eth::from_milli(14_400));
        assert_eq!(Eth::from_milli(14_400).to_string(), "14.4");
        assert_eq!(Eth::from_milli(8).to_string(), "0.008");
        assert_eq!(Eth::whole(5).to_string(), "5");
        assert_eq!((-Eth::from_milli(500)).to_string(), "-0.5");
        assert_eq!(".5".parse::<Eth>().unwrap(), Eth::from_milli(500));
        assert_eq!(Eth::from_wei(1).to_string(), "0.000000000000000001");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", ".", "1.2.3", "abc", "1e5", "0.0000000000000000001"] {
            assert!(bad.parse::<Eth>().is_err(), "{bad}");
        }
    }

    #[test]
    fn json_numbers_are_exact() {
        let v: Vec<Eth> = serde_json::from_str(r#"[0.07, 100, "0.009", 1.5]"#).unwrap();
        assert_eq!(
            v,
            vec![
                Eth::from_milli(70),
                Eth::whole(100),
                Eth::from_milli(9),
                Eth::from_milli(1500)
            ]
        );
        assert_eq!(serde_json::to_string(&Eth::from_milli(70)).unwrap(), "\"0.07\"");
    }
}
