//! Realisations of Gegenbauer processes: wavelet packet synthesis and the
//! exact Hosking (Durbin-Levinson) sampler.
//!
//! Random numbers come from ChaCha20 keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`). Replicate `r` of the packet simulator uses
//! stream `2r`, replicate `r` of the Hosking sampler stream `2r + 1`; within a
//! stream normals are drawn in leaf order (band lower edge), then position.
//! Outputs therefore do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::QmfPair;
use crate::gegenbauer::{autocovariance, packet_variance, GegenbauerModel, ACV_TOL, BETA_TOL};
use crate::wpt::{synthesize, WpCoefficients, WpTree};

fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Configuration of a packet-domain simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: GegenbauerModel,
    pub tree: WpTree,
    pub filter: QmfPair,
    pub seed: u64,
    pub replicates: usize,
}

impl SimConfig {
    pub fn new(model: GegenbauerModel, tree: WpTree, filter: QmfPair, seed: u64, replicates: usize) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidArgument("at least one replicate is required".into()));
        }
        Ok(SimConfig { model, tree, filter, seed, replicates })
    }

    /// Series length `N = 2^J`.
    pub fn n(&self) -> usize {
        self.tree.len()
    }
}

/// Per-coefficient variances `σ²_{j,p} = 2^j β²_{j,p}`, in leaf order.
pub fn leaf_variances(model: &GegenbauerModel, tree: &WpTree, tol: f64) -> Result<Vec<f64>> {
    tree.leaves()
        .par_iter()
        .map(|l| packet_variance(model, l.j, l.p, tol))
        .collect()
}

/// Draws independent Gaussian packet coefficients with the given per-leaf
/// variances and inverts the transform.
pub fn simulate_wp_with(
    tree: &WpTree,
    filter: &QmfPair,
    variances: &[f64],
    seed: u64,
    replicates: usize,
) -> Result<Vec<Vec<f64>>> {
    if variances.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} variances for {} leaves",
            variances.len(),
            tree.leaf_count()
        )));
    }
    let scales: Vec<f64> = variances.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, 2 * r);
            let mut coeffs = WpCoefficients::zeros(tree.clone());
            for (block, s) in coeffs.blocks_mut().iter_mut().zip(&scales) {
                for c in block.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c = s * z;
                }
            }
            synthesize(&coeffs, filter)
        })
        .collect())
}

/// Packet-domain simulation: band-pass variances per leaf, independent
/// Gaussian coefficients, inverse transform.
pub fn simulate_wp(config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let variances = leaf_variances(&config.model, &config.tree, BETA_TOL)?;
    simulate_wp_with(&config.tree, &config.filter, &variances, config.seed, config.replicates)
}

/// Durbin-Levinson prediction coefficients: row `t` holds `φ_{t,1..t}` and
/// `v[t]` the innovation variance of `X_{t+1}` given the past `t` values.
#[derive(Debug, Clone)]
pub struct DurbinLevinson {
    phi: Vec<Vec<f64>>,
    v: Vec<f64>,
}

impl DurbinLevinson {
    pub fn new(gamma: &[f64], n: usize) -> Result<Self> {
        if n == 0 || gamma.len() < n {
            return Err(Error::DimensionMismatch(format!(
                "need {n} autocovariances, got {}",
                gamma.len()
            )));
        }
        let mut phi: Vec<Vec<f64>> = vec![Vec::new()];
        let mut v = vec![gamma[0]];
        if !(gamma[0] > 0.0) {
            return Err(Error::NonPositiveDefinite { step: 0, value: gamma[0] });
        }
        for t in 1..n {
            let prev = &phi[t - 1];
            let acc: f64 = prev.iter().enumerate().map(|(k, p)| p * gamma[t - 1 - k]).sum();
            let kappa = (gamma[t] - acc) / v[t - 1];
            let mut row = Vec::with_capacity(t);
            for k in 0..t - 1 {
                row.push(prev[k] - kappa * prev[t - 2 - k]);
            }
            row.push(kappa);
            let next = v[t - 1] * (1.0 - kappa * kappa);
            if !(next > 0.0) {
                return Err(Error::NonPositiveDefinite { step: t, value: next });
            }
            phi.push(row);
            v.push(next);
        }
        Ok(DurbinLevinson { phi, v })
    }

    pub fn innovation_variances(&self) -> &[f64] {
        &self.v
    }

    /// One series from independent standard normals `z`.
    pub fn filter(&self, z: &[f64]) -> Vec<f64> {
        let n = self.v.len();
        let mut x = Vec::with_capacity(n);
        for t in 0..n {
            let mean: f64 = self.phi[t].iter().enumerate().map(|(k, p)| p * x[t - 1 - k]).sum();
            x.push(mean + self.v[t].sqrt() * z[t]);
        }
        x
    }
}

/// Exact Gaussian simulation from a given autocovariance sequence.
pub fn simulate_hosking_acv(gamma: &[f64], n: usize, seed: u64, replicates: usize) -> Result<Vec<Vec<f64>>> {
    let dl = DurbinLevinson::new(gamma, n)?;
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, 2 * r + 1);
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            dl.filter(&z)
        })
        .collect())
}

/// Exact Gaussian simulation of `model` (Hosking's method).
pub fn simulate_hosking(model: &GegenbauerModel, n: usize, seed: u64, replicates: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("series length must be positive".into()));
    }
    let acv = autocovariance(model, n - 1, ACV_TOL)?;
    simulate_hosking_acv(&acv.gamma, n, seed, replicates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcvEstimator {
    /// Divide lag-`h` sums by `N − h`.
    Unbiased,
    /// Divide by `N`.
    Biased,
}

/// Sample autocovariance (mean removed) for lags `0..=max_lag`.
pub fn sample_acv(series: &[f64], max_lag: usize, estimator: AcvEstimator) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!("max_lag {max_lag} must be below the length {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    Ok((0..=max_lag)
        .map(|h| {
            let s: f64 = centred[..n - h].iter().zip(&centred[h..]).map(|(a, b)| a * b).sum();
            match estimator {
                AcvEstimator::Unbiased => s / (n - h) as f64,
                AcvEstimator::Biased => s / n as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_acv_examples() {
        let c = sample_acv(&[2.0; 8], 3, AcvEstimator::Unbiased).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        let x = [1.0, -1.0, 1.0, -1.0];
        let u = sample_acv(&x, 1, AcvEstimator::Unbiased).unwrap();
        assert!((u[1] + 1.0).abs() < 1e-15);
        let b = sample_acv(&x, 1, AcvEstimator::Biased).unwrap();
        assert!((b[1] + 0.75).abs() < 1e-15);
        assert!(sample_acv(&x, 4, AcvEstimator::Biased).is_err());
    }

    #[test]
    fn durbin_levinson_ar1() {
        // AR(1) with φ = 0.5: γ(h) = 0.5^h / 0.75.
        let gamma: Vec<f64> = (0..6).map(|h| 0.5f64.powi(h) / 0.75).collect();
        let dl = DurbinLevinson::new(&gamma, 6).unwrap();
        for t in 1..6 {
            assert!((dl.phi[t][0] - 0.5).abs() < 1e-14);
            assert!(dl.phi[t][1..].iter().all(|p| p.abs() < 1e-14));
            assert!((dl.v[t] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn durbin_levinson_rejects_indefinite() {
        assert!(matches!(
            DurbinLevinson::new(&[1.0, 1.5], 2),
            Err(Error::NonPositiveDefinite { step: 1, .. })
        ));
    }
}
