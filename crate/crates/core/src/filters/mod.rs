//! Orthonormal quadrature mirror filter pairs.
//!
//! Daubechies, Symmlet and Coiflet low-pass filters are embedded constants
//! (see `tables.rs`); Battle-Lemarié filters are computed on demand from the
//! B-spline autocorrelation. The high-pass filter always follows the
//! conjugate mirror relation `g(n) = (-1)^n h(1 - n)`.

mod spline;
mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Daubechies,
    Symmlet,
    Coiflet,
    BattleLemarie,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Daubechies,
        Family::Symmlet,
        Family::Coiflet,
        Family::BattleLemarie,
    ];

    /// Vanishing-moment counts available for this family, ascending.
    pub fn supported_orders(self) -> &'static [usize] {
        match self {
            Family::Daubechies => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
            Family::Symmlet => &[4, 5, 6, 7, 8, 9, 10],
            Family::Coiflet => &[2, 4, 6, 8, 10],
            Family::BattleLemarie => &[2, 4, 6],
        }
    }

    /// Orders used for the comparison tables (even q only).
    pub fn table_orders(self) -> &'static [usize] {
        match self {
            Family::Daubechies => &[2, 4, 6, 8, 10],
            Family::Symmlet => &[4, 6, 8, 10],
            Family::Coiflet => &[2, 4, 6, 8, 10],
            Family::BattleLemarie => &[2, 4, 6],
        }
    }

    pub fn max_order(self) -> usize {
        *self.supported_orders().last().unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Daubechies => "daubechies",
            Family::Symmlet => "symmlet",
            Family::Coiflet => "coiflet",
            Family::BattleLemarie => "battle-lemarie",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "daubechies" | "db" => Ok(Family::Daubechies),
            "symmlet" | "symlet" | "sym" => Ok(Family::Symmlet),
            "coiflet" | "coif" => Ok(Family::Coiflet),
            "battle-lemarie" | "battlelemarie" | "battle" | "bl" => Ok(Family::BattleLemarie),
            other => Err(Error::InvalidArgument(format!("unknown wavelet family '{other}'"))),
        }
    }
}

/// Which branch of the filter pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Low,
    High,
}

/// A conjugate QMF pair `(h, g)`.
///
/// `lowpass[i]` is `h(support_lo + i)` and `highpass[i]` is
/// `g(highpass_start() + i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmfPair {
    pub family: Family,
    pub q: usize,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub support_lo: i64,
    pub support_hi: i64,
}

impl QmfPair {
    fn from_lowpass(family: Family, q: usize, lowpass: Vec<f64>, support_lo: i64) -> Self {
        let support_hi = support_lo + lowpass.len() as i64 - 1;
        // g(n) = (-1)^n h(1 - n) for n = 1 - N2 ..= 1 - N1
        let g_start = 1 - support_hi;
        let highpass = (0..lowpass.len() as i64)
            .map(|i| {
                let n = g_start + i;
                let h = lowpass[(1 - n - support_lo) as usize];
                if n.rem_euclid(2) == 0 {
                    h
                } else {
                    -h
                }
            })
            .collect();
        QmfPair {
            family,
            q,
            lowpass,
            highpass,
            support_lo,
            support_hi,
        }
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// First index of the high-pass filter, `1 - N2`.
    pub fn highpass_start(&self) -> i64 {
        1 - self.support_hi
    }

    /// `N* = max(|N1|, |N2|)`, the half-width used by support conditions.
    pub fn n_star(&self) -> i64 {
        self.support_lo.abs().max(self.support_hi.abs())
    }

    /// Coefficients and starting index of one branch.
    pub fn branch(&self, which: Branch) -> (&[f64], i64) {
        match which {
            Branch::Low => (&self.lowpass, self.support_lo),
            Branch::High => (&self.highpass, self.highpass_start()),
        }
    }

    /// Battle-Lemarié filters are truncated from an infinite response and
    /// are only approximately orthonormal.
    pub fn is_truncated(&self) -> bool {
        self.family == Family::BattleLemarie
    }

    /// Short conventional label (`db10`, `sym8`, `coif5`, `bl6`).
    pub fn label(&self) -> String {
        match self.family {
            Family::Daubechies => format!("db{}", self.q),
            Family::Symmlet => format!("sym{}", self.q),
            Family::Coiflet => format!("coif{}", self.q / 2),
            Family::BattleLemarie => format!("bl{}", self.q),
        }
    }
}

/// Builds the filter pair for `family` with `q` vanishing moments.
pub fn make_filter(family: Family, q: usize) -> Result<QmfPair> {
    if !family.supported_orders().contains(&q) {
        return Err(Error::UnsupportedFamilyOrder { family, q });
    }
    let pair = match family {
        Family::Daubechies => QmfPair::from_lowpass(family, q, tables::daubechies(q).to_vec(), 0),
        Family::Symmlet => QmfPair::from_lowpass(family, q, tables::symmlet(q).to_vec(), 0),
        Family::Coiflet => QmfPair::from_lowpass(family, q, tables::coiflet(q / 2).to_vec(), 0),
        Family::BattleLemarie => {
            let (h, start) = spline::battle_lemarie(q);
            QmfPair::from_lowpass(family, q, h, start)
        }
    };
    Ok(pair)
}

/// Parses labels such as `db10`, `sym8`, `coif5` (order 5, q = 10), `bl6`,
/// or the explicit form `family:q` (e.g. `coiflet:10`).
pub fn parse_filter(label: &str) -> Result<QmfPair> {
    let label = label.trim().to_ascii_lowercase();
    if let Some((fam, q)) = label.split_once(':') {
        let family: Family = fam.parse()?;
        let q = q
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad filter order in '{label}'")))?;
        return make_filter(family, q);
    }
    let split = label
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| Error::InvalidArgument(format!("filter label '{label}' has no order")))?;
    let (fam, num) = label.split_at(split);
    let num: usize = num
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad filter order in '{label}'")))?;
    match fam {
        "haar" => make_filter(Family::Daubechies, 1),
        "db" => make_filter(Family::Daubechies, num),
        "sym" => make_filter(Family::Symmlet, num),
        "coif" => make_filter(Family::Coiflet, 2 * num),
        "bl" => make_filter(Family::BattleLemarie, num),
        other => Err(Error::InvalidArgument(format!("unknown filter prefix '{other}'"))),
    }
}

/// `|sum_n c(n) exp(-i 2 pi lambda n)|^2` for the selected branch.
pub fn squared_gain(filter: &QmfPair, which: Branch, lambda: f64) -> f64 {
    let (coeffs, start) = filter.branch(which);
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &c) in coeffs.iter().enumerate() {
        let phase = -2.0 * std::f64::consts::PI * lambda * (start + i as i64) as f64;
        re += c * phase.cos();
        im += c * phase.sin();
    }
    re * re + im * im
}
