//! Frequencies with exact dyadic-edge detection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for treating a float frequency as lying on a dyadic edge.
pub const EDGE_TOL: f64 = 1e-12;

/// A frequency in `[0, 1/2]`. When parsed from a rational (`1/12`) or a
/// finite decimal (`0.375`) the exact value is kept so that dyadic-edge
/// membership is decided without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    value: f64,
    exact: Option<(u128, u128)>,
}

/// Location of a frequency relative to the grid `k / 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPosition {
    /// Exactly `k / 2^level`.
    OnEdge(u64),
    /// Strictly inside `(k / 2^level, (k+1) / 2^level)`.
    Inside(u64),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Frequency {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&value) {
            return Err(Error::InvalidFrequency(value));
        }
        Ok(Frequency { value, exact: None })
    }

    /// Exact rational `num / den`.
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let (n, d) = (num as u128, den as u128);
        if 2 * n > d {
            return Err(Error::InvalidFrequency(num as f64 / den as f64));
        }
        let g = gcd(n, d).max(1);
        Ok(Frequency { value: num as f64 / den as f64, exact: Some((n / g, d / g)) })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Position relative to the grid of spacing `2^-level` (`level <= 62`).
    pub fn grid_position(&self, level: u32) -> GridPosition {
        match self.exact {
            Some((n, d)) => {
                let scaled = n << level;
                let k = (scaled / d) as u64;
                if scaled.is_multiple_of(d) {
                    GridPosition::OnEdge(k)
                } else {
                    GridPosition::Inside(k)
                }
            }
            None => {
                let x = self.value * (1u64 << level) as f64;
                let r = x.round();
                if (x - r).abs() < EDGE_TOL {
                    GridPosition::OnEdge(r as u64)
                } else {
                    GridPosition::Inside(x.floor() as u64)
                }
            }
        }
    }

    /// Closed-interval membership in `[lo / 2^level, hi / 2^level]`.
    pub fn in_closed(&self, lo: u64, hi: u64, level: u32) -> bool {
        match self.grid_position(level) {
            GridPosition::OnEdge(k) => lo <= k && k <= hi,
            GridPosition::Inside(k) => lo <= k && k < hi,
        }
    }

    /// Equality used for duplicate detection.
    pub fn same_as(&self, other: &Frequency) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => (self.value - other.value).abs() < EDGE_TOL,
        }
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.value
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some((n, d)) if d != 1 => write!(f, "{n}/{d}"),
            _ => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;

    /// Accepts `a/b`, finite decimals (`0.375`) and any float literal.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse frequency '{s}'"));
        if let Some((a, b)) = s.split_once('/') {
            let num: u64 = a.trim().parse().map_err(|_| bad())?;
            let den: u64 = b.trim().parse().map_err(|_| bad())?;
            return Frequency::rational(num, den);
        }
        let value: f64 = s.parse().map_err(|_| bad())?;
        if !(0.0..=0.5).contains(&value) {
            return Err(Error::InvalidFrequency(value));
        }
        // Plain decimals up to 18 fractional digits are kept exactly.
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let plain = |t: &str| t.bytes().all(|c| c.is_ascii_digit());
        if plain(int) && plain(frac) && frac.len() <= 18 && int.len() <= 2 {
            let den = 10u64.pow(frac.len() as u32);
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            if let Some(num) = int.checked_mul(den).and_then(|v| v.checked_add(frac_v)) {
                return Frequency::rational(num, den);
            }
        }
        Frequency::new(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        let f: Frequency = "1/12".parse().unwrap();
        assert_eq!(f.to_string(), "1/12");
        let g: Frequency = "0.375".parse().unwrap();
        assert_eq!(g.to_string(), "3/8");
        assert!(g.is_exact());
        let h: Frequency = "1e-1".parse().unwrap();
        assert!(!h.is_exact());
        assert!("0.6".parse::<Frequency>().is_err());
        assert!("2/3".parse::<Frequency>().is_err());
        assert!("x".parse::<Frequency>().is_err());
    }

    #[test]
    fn grid_positions() {
        let f = Frequency::rational(3, 8).unwrap();
        assert_eq!(f.grid_position(2), GridPosition::Inside(1));
        assert_eq!(f.grid_position(3), GridPosition::OnEdge(3));
        assert_eq!(f.grid_position(5), GridPosition::OnEdge(12));
        let g = Frequency::new(0.375).unwrap();
        assert_eq!(g.grid_position(5), GridPosition::OnEdge(12));
        let t = Frequency::rational(1, 12).unwrap();
        assert_eq!(t.grid_position(4), GridPosition::Inside(1));
        assert!(t.in_closed(1, 2, 4));
        assert!(!t.in_closed(0, 1, 4));
    }
}
