//! k-factor Gegenbauer processes: spectral density, exact autocovariance and
//! band-pass variances.
//!
//! The spectral density
//! `f(λ) = σ²/(2π) · Π_i [4 (cos 2πλ − cos 2πν_i)²]^(−d_i)`
//! has integrable poles at each `ν_i`. Integrals over `[0, 1/2]` are split at
//! every pole and the pieces adjacent to a pole at `s` are integrated in
//! `u = |λ − s|^(1−e)`, where `e` is the local exponent (`2d`, or `4d` when
//! `s` is 0 or 1/2 and the pole pair merges). That substitution removes the
//! dominant singular factor exactly.

pub mod quad;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Innovation variance giving a white-noise spectral density of 1.
pub const DEFAULT_SIGMA2: f64 = 2.0 * PI;
/// Default relative tolerance for band-pass variances.
pub const BETA_TOL: f64 = 1e-8;
/// Default relative tolerance for autocovariances (relative to γ(0)).
pub const ACV_TOL: f64 = 1e-7;
/// Distance below which a frequency counts as equal to a pole.
pub const POLE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub d: f64,
    pub nu: f64,
}

impl Factor {
    fn is_boundary(&self) -> bool {
        self.nu == 0.0 || self.nu == 0.5
    }

    /// Exponent `e` with `f(λ) ~ |λ − ν|^(−e)` near the pole.
    pub fn local_exponent(&self) -> f64 {
        if self.is_boundary() {
            4.0 * self.d
        } else {
            2.0 * self.d
        }
    }

    /// `ln [4 (cos 2πλ − cos 2πν)²]` at `λ = ν + t`, evaluated from the
    /// offset so that poles are resolved for arbitrarily small `t`.
    fn log_term_at_offset(&self, t: f64) -> f64 {
        let sum = if self.nu == 0.5 {
            -(PI * t).sin()
        } else {
            (PI * (2.0 * self.nu + t)).sin()
        };
        let diff = (PI * t).sin();
        (16.0 * sum * sum * diff * diff).ln()
    }

    fn log_term(&self, lambda: f64) -> f64 {
        // cos a − cos b = −2 sin((a+b)/2) sin((a−b)/2)
        let s = (PI * (lambda + self.nu)).sin() * (PI * (lambda - self.nu)).sin();
        (16.0 * s * s).ln()
    }
}

/// A k-factor Gegenbauer model. `k = 0` is white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GegenbauerModel {
    factors: Vec<Factor>,
    sigma2: f64,
}

impl GegenbauerModel {
    /// Validates stationarity (`0 < d < 1/2`, or `< 1/4` at ν ∈ {0, 1/2}),
    /// `ν ∈ [0, 1/2]`, distinct frequencies and `σ² > 0`.
    pub fn new(factors: Vec<(f64, f64)>, sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidModel(format!("innovation variance {sigma2} must be positive")));
        }
        let mut out: Vec<Factor> = Vec::with_capacity(factors.len());
        for (d, nu) in factors {
            if !(0.0..=0.5).contains(&nu) {
                return Err(Error::InvalidFrequency(nu));
            }
            let f = Factor { d, nu };
            let bound = if f.is_boundary() { 0.25 } else { 0.5 };
            if !(d > 0.0 && d < bound) {
                return Err(Error::InvalidModel(format!(
                    "memory parameter d = {d} at nu = {nu} must lie in (0, {bound})"
                )));
            }
            if out.iter().any(|g| (g.nu - nu).abs() < POLE_EPS) {
                return Err(Error::DuplicateFrequency(nu));
            }
            out.push(f);
        }
        out.sort_by(|a, b| a.nu.total_cmp(&b.nu));
        Ok(GegenbauerModel { factors: out, sigma2 })
    }

    pub fn single(d: f64, nu: f64) -> Result<Self> {
        Self::new(vec![(d, nu)], DEFAULT_SIGMA2)
    }

    pub fn white_noise(sigma2: f64) -> Result<Self> {
        Self::new(Vec::new(), sigma2)
    }

    /// Factors sorted by frequency.
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.nu).collect()
    }

    fn level(&self) -> f64 {
        self.sigma2 / (2.0 * PI)
    }

    /// Spectral density at `λ`.
    pub fn psd(&self, lambda: f64) -> Result<f64> {
        if !(0.0..=0.5).contains(&lambda) {
            return Err(Error::InvalidFrequency(lambda));
        }
        if let Some(f) = self.factors.iter().find(|f| (f.nu - lambda).abs() < POLE_EPS) {
            return Err(Error::SingularFrequency(f.nu));
        }
        Ok(self.psd_unchecked(lambda))
    }

    fn psd_unchecked(&self, lambda: f64) -> f64 {
        let log: f64 = self.factors.iter().map(|f| -f.d * f.log_term(lambda)).sum();
        self.level() * log.exp()
    }

    /// `f(s + t)` where `s` is the pole of factor `pole`.
    fn psd_near_pole(&self, pole: usize, t: f64) -> f64 {
        let s = self.factors[pole].nu;
        let log: f64 = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let term = if i == pole { f.log_term_at_offset(t) } else { f.log_term(s + t) };
                -f.d * term
            })
            .sum();
        self.level() * log.exp()
    }

    fn pole_at(&self, x: f64) -> Option<usize> {
        self.factors.iter().position(|f| (f.nu - x).abs() < POLE_EPS)
    }

    /// `∫_lo^hi f(λ) w(λ) dλ` with the singularity-aware split.
    pub fn integrate<W>(&self, lo: f64, hi: f64, weight: W, tol: f64) -> Result<f64>
    where
        W: Fn(f64) -> f64,
    {
        if !(0.0 <= lo && lo <= hi && hi <= 0.5) {
            return Err(Error::InvalidArgument(format!("integration range [{lo}, {hi}] outside [0, 1/2]")));
        }
        let mut cuts = vec![lo];
        cuts.extend(self.factors.iter().map(|f| f.nu).filter(|&nu| nu > lo + POLE_EPS && nu < hi - POLE_EPS));
        cuts.push(hi);

        // Each piece has at most one singular endpoint.
        enum Kind {
            Regular,
            Pole { pole: usize, dir: f64, alpha: f64 },
        }
        let mut kinds = Vec::new();
        let mut ranges = Vec::new();
        let mut push_half = |a: f64, b: f64, pole: Option<usize>, at_left: bool| {
            match pole {
                None => {
                    kinds.push(Kind::Regular);
                    ranges.push((a, b));
                }
                Some(i) => {
                    let alpha = 1.0 - self.factors[i].local_exponent();
                    let len = b - a;
                    kinds.push(Kind::Pole { pole: i, dir: if at_left { 1.0 } else { -1.0 }, alpha });
                    ranges.push((0.0, len.powf(alpha)));
                }
            }
        };
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (pa, pb) = (self.pole_at(a), self.pole_at(b));
            match (pa, pb) {
                (Some(_), Some(_)) => {
                    let m = 0.5 * (a + b);
                    push_half(a, m, pa, true);
                    push_half(m, b, pb, false);
                }
                (Some(_), None) => push_half(a, b, pa, true),
                (None, Some(_)) => push_half(a, b, pb, false),
                (None, None) => push_half(a, b, None, true),
            }
        }

        let integrand = |k: usize, x: f64| match kinds[k] {
            Kind::Regular => self.psd_unchecked(x) * weight(x),
            Kind::Pole { pole, dir, alpha } => {
                // λ = s + dir·t, t = u^(1/alpha), dλ = t/(alpha u) du.
                let t = x.powf(1.0 / alpha);
                let jac = x.powf(1.0 / alpha - 1.0) / alpha;
                let s = self.factors[pole].nu;
                self.psd_near_pole(pole, dir * t) * weight(s + dir * t) * jac
            }
        };
        quad::integrate_pieces(integrand, &ranges, tol)
    }

    /// `β² = 2 ∫ f` over `[lo, hi]`.
    pub fn band_variance(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        Ok(2.0 * self.integrate(lo, hi, |_| 1.0, tol)?)
    }
}

/// Band-pass variance `β²_{j,p} = 2 ∫ f` over `[p/2^(j+1), (p+1)/2^(j+1)]`.
pub fn band_pass_variance(model: &GegenbauerModel, j: u32, p: u64, tol: f64) -> Result<f64> {
    if j >= 63 || p >= 1u64 << j {
        return Err(Error::InvalidArgument(format!("node ({j}, {p}) is out of range")));
    }
    let w = 0.5 / (1u64 << j) as f64;
    model.band_variance(p as f64 * w, (p + 1) as f64 * w, tol)
}

/// Variance of a single packet coefficient at node `(j, p)`: `2^j β²_{j,p}`.
pub fn packet_variance(model: &GegenbauerModel, j: u32, p: u64, tol: f64) -> Result<f64> {
    Ok((1u64 << j) as f64 * band_pass_variance(model, j, p, tol)?)
}

pub fn psd(model: &GegenbauerModel, lambda: f64) -> Result<f64> {
    model.psd(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcvMethod {
    /// Singularity-split adaptive Gauss-Kronrod quadrature.
    Quadrature,
}

/// Exact autocovariances `γ(0..=h_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcvTable {
    pub model: GegenbauerModel,
    pub gamma: Vec<f64>,
    pub method: AcvMethod,
    pub tol: f64,
}

impl AcvTable {
    pub fn h_max(&self) -> usize {
        self.gamma.len() - 1
    }

    /// `γ(h)` with the symmetric extension `γ(−h) = γ(h)`.
    pub fn gamma_at(&self, h: i64) -> Option<f64> {
        self.gamma.get(h.unsigned_abs() as usize).copied()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g / self.gamma[0]).collect()
    }

    /// The `n × n` Toeplitz matrix `Γ(s, t) = γ(|s − t|)`.
    pub fn toeplitz(&self, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 || n > self.gamma.len() {
            return Err(Error::DimensionMismatch(format!(
                "Toeplitz size {n} needs lags up to {}, table has {}",
                n.saturating_sub(1),
                self.h_max()
            )));
        }
        Ok(DMatrix::from_fn(n, n, |s, t| self.gamma[s.abs_diff(t)]))
    }
}

/// `γ(h) = 2 ∫_0^{1/2} f(λ) cos(2πλh) dλ` for `h = 0..=h_max`. The error
/// target for each lag is `tol` relative to `∫ |f cos|`, so lags where γ is
/// tiny are resolved to a fraction of γ(0) rather than of themselves.
pub fn autocovariance(model: &GegenbauerModel, h_max: usize, tol: f64) -> Result<AcvTable> {
    let gamma = (0..=h_max)
        .into_par_iter()
        .map(|h| {
            let w = 2.0 * PI * h as f64;
            Ok(2.0 * model.integrate(0.0, 0.5, |x| (w * x).cos(), tol)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AcvTable { model: model.clone(), gamma, method: AcvMethod::Quadrature, tol })
}

/// Envelope reference `h^(2d−1) cos(2πνh)` for the large-lag correlation.
pub fn acv_asymptote(d: f64, nu: f64, h: f64) -> f64 {
    h.powf(2.0 * d - 1.0) * (2.0 * PI * nu * h).cos()
}

/// Exact `n × n` covariance matrix of `n` consecutive observations.
pub fn covariance_matrix(model: &GegenbauerModel, n: usize, tol: f64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("covariance matrix size must be positive".into()));
    }
    autocovariance(model, n - 1, tol)?.toeplitz(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_psd() {
        let m = GegenbauerModel::white_noise(3.0).unwrap();
        assert!((m.psd(0.1).unwrap() - 3.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_psd() {
        let m = GegenbauerModel::single(0.4, 1.0 / 12.0).unwrap();
        let want = 3f64.powf(-0.4);
        assert!((m.psd(0.25).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn psd_diverges_at_pole() {
        let nu = 1.0 / 12.0;
        let m = GegenbauerModel::single(0.4, nu).unwrap();
        for s in [-1.0, 1.0] {
            let near = m.psd(nu + s * 1e-8).unwrap();
            let far = m.psd(nu + s * 1e-2).unwrap();
            assert!(near > 1e4 * far);
        }
        assert!(matches!(m.psd(nu), Err(Error::SingularFrequency(_))));
    }

    #[test]
    fn pole_offset_matches_direct() {
        let m = GegenbauerModel::new(vec![(0.3, 0.1), (0.2, 0.5)], 1.0).unwrap();
        for (i, t) in [(0usize, 1e-3), (0, -2e-3), (1, -1e-3)] {
            let s = m.factors()[i].nu;
            let a = m.psd_near_pole(i, t);
            let b = m.psd_unchecked(s + t);
            assert!((a / b - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn model_validation() {
        assert!(GegenbauerModel::single(0.5, 0.1).is_err());
        assert!(GegenbauerModel::single(0.0, 0.1).is_err());
        assert!(GegenbauerModel::single(0.3, 0.0).is_err());
        assert!(GegenbauerModel::single(0.3, 0.5).is_err());
        assert!(GegenbauerModel::single(0.2, 0.5).is_ok());
        assert!(matches!(GegenbauerModel::single(0.2, 0.7), Err(Error::InvalidFrequency(_))));
        assert!(matches!(
            GegenbauerModel::new(vec![(0.2, 0.1), (0.3, 0.1)], 1.0),
            Err(Error::DuplicateFrequency(_))
        ));
        assert!(GegenbauerModel::white_noise(0.0).is_err());
    }

    #[test]
    fn white_noise_band_variance() {
        let m = GegenbauerModel::white_noise(DEFAULT_SIGMA2).unwrap();
        for (j, p) in [(0, 0), (3, 5), (7, 100)] {
            let b = band_pass_variance(&m, j, p, BETA_TOL).unwrap();
            assert!((b - 0.5f64.powi(j as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn white_noise_acv() {
        // γ(0) = 2 ∫ f = σ²/(2π); the default σ² makes it 1.
        let m = GegenbauerModel::white_noise(DEFAULT_SIGMA2).unwrap();
        let t = autocovariance(&m, 5, ACV_TOL).unwrap();
        assert!((t.gamma[0] - 1.0).abs() < 1e-10);
        assert!(t.gamma[1..].iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn additivity_with_pole_on_split() {
        // ν = 1/8 sits exactly on the split point of (2, 0) into (3, 0), (3, 1).
        let m = GegenbauerModel::new(vec![(0.45, 0.125), (0.2, 0.0)], DEFAULT_SIGMA2).unwrap();
        for (j, p) in [(0u32, 0u64), (1, 0), (2, 0), (4, 3)] {
            let parent = band_pass_variance(&m, j, p, BETA_TOL).unwrap();
            let kids = band_pass_variance(&m, j + 1, 2 * p, BETA_TOL).unwrap()
                + band_pass_variance(&m, j + 1, 2 * p + 1, BETA_TOL).unwrap();
            assert!((parent / kids - 1.0).abs() < 1e-7, "({j},{p}): {parent} vs {kids}");
        }
    }

    #[test]
    fn asymptote_examples() {
        assert!((acv_asymptote(0.4, 0.3, 1.0) - (2.0 * PI * 0.3).cos()).abs() < 1e-15);
        assert!((acv_asymptote(0.25, 0.0, 16.0) - 0.25).abs() < 1e-15);
        assert!((acv_asymptote(0.4, 1.0 / 12.0, 12.0) - 12f64.powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn toeplitz_layout() {
        let m = GegenbauerModel::single(0.3, 0.2).unwrap();
        let t = autocovariance(&m, 3, ACV_TOL).unwrap();
        let g = t.toeplitz(2).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[t.gamma[0], t.gamma[1], t.gamma[1], t.gamma[0]]));
        assert!(t.toeplitz(5).is_err());
        assert_eq!(t.gamma_at(-2), Some(t.gamma[2]));
    }
}
