//! Diagonalisation scores and covariance-decay checks in a packet basis.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bestbasis::{best_basis_kfactor, whitcher_basis, Frequency, WHITCHER_THRESHOLD};
use crate::error::{Error, Result};
use crate::filters::QmfPair;
use crate::gegenbauer::{autocovariance, AcvTable, GegenbauerModel};
use crate::simulate::{sample_acv, simulate_hosking_acv, simulate_wp_with, leaf_variances, AcvEstimator};
use crate::gegenbauer::BETA_TOL;
use crate::wpt::{transform_matrix, WpNode, WpTree};

/// `Γ[B] = Wᵀ Γ W` with `W` the synthesis matrix of `tree`.
pub fn wp_covariance(gamma: &DMatrix<f64>, tree: &WpTree, filter: &QmfPair) -> Result<DMatrix<f64>> {
    let n = tree.len();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, tree needs {n}x{n}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let w = transform_matrix(tree, filter);
    let mut out = w.transpose() * gamma * &w;
    // Symmetrise away rounding.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    Ok(out)
}

/// `Ω(i, j) = Γ(i, j) / sqrt(Γ(i, i) Γ(j, j))`.
pub fn correlation_from_covariance(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !gamma.is_square() {
        return Err(Error::DimensionMismatch("covariance matrix must be square".into()));
    }
    let mut scale = Vec::with_capacity(gamma.nrows());
    for i in 0..gamma.nrows() {
        let v = gamma[(i, i)];
        if !(v > 0.0) {
            return Err(Error::ZeroVariance(i));
        }
        scale.push(v.sqrt());
    }
    let mut omega = DMatrix::from_fn(gamma.nrows(), gamma.ncols(), |i, j| gamma[(i, j)] / (scale[i] * scale[j]));
    omega.fill_diagonal(1.0);
    Ok(omega)
}

/// Squared Hilbert-Schmidt distance `‖Ω − I‖²`.
pub fn hs_error(omega: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for (idx, v) in omega.iter().enumerate() {
        let (i, j) = (idx % omega.nrows(), idx / omega.nrows());
        let d = if i == j { v - 1.0 } else { *v };
        s += d * d;
    }
    s
}

/// `λ = ‖Ω − I‖² / (N − 1)`: the penalty at which the identity basis (one
/// packet, error `‖Ω − I‖²`) and the finest basis (`N` packets, error ~0)
/// score alike.
pub fn lambda_weight(omega: &DMatrix<f64>) -> Result<f64> {
    let n = omega.nrows();
    if n < 2 || !omega.is_square() {
        return Err(Error::DimensionMismatch(format!("lambda needs a square matrix of size >= 2, got {n}")));
    }
    Ok(hs_error(omega) / (n - 1) as f64)
}

/// Exact second-order description of a process at length `N`, shared by
/// all bases scored against it.
#[derive(Debug, Clone)]
pub struct ExactProcess {
    pub model: GegenbauerModel,
    pub acv: AcvTable,
    pub gamma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub lambda: f64,
}

impl ExactProcess {
    pub fn new(model: &GegenbauerModel, n: usize, tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("series length must be at least 2".into()));
        }
        let acv = autocovariance(model, n - 1, tol)?;
        let gamma = acv.toeplitz(n)?;
        let omega = correlation_from_covariance(&gamma)?;
        let lambda = lambda_weight(&omega)?;
        Ok(ExactProcess { model: model.clone(), acv, gamma, omega, lambda })
    }

    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.acv.rho()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub basis: String,
    pub leaf_count: usize,
    pub lambda: f64,
    pub hs_error: f64,
    pub s: f64,
    pub b: Option<f64>,
    pub b_pen: Option<f64>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
}

/// Penalised diagonalisation score `S = ‖Ω[B] − I‖² + λ·#B`.
pub fn score_s_exact(process: &ExactProcess, tree: &WpTree, filter: &QmfPair, basis: &str) -> Result<ScoreReport> {
    if tree.len() != process.n() {
        return Err(Error::LengthMismatch { depth: tree.depth(), expected: tree.len(), got: process.n() });
    }
    let gb = wp_covariance(&process.gamma, tree, filter)?;
    let hs = hs_error(&correlation_from_covariance(&gb)?);
    Ok(ScoreReport {
        basis: basis.to_string(),
        leaf_count: tree.leaf_count(),
        lambda: process.lambda,
        hs_error: hs,
        s: hs + process.lambda * tree.leaf_count() as f64,
        b: None,
        b_pen: None,
        replicates: None,
        seed: None,
    })
}

pub fn score_s(model: &GegenbauerModel, tree: &WpTree, filter: &QmfPair, tol: f64) -> Result<ScoreReport> {
    let process = ExactProcess::new(model, tree.len(), tol)?;
    score_s_exact(&process, tree, filter, "basis")
}

/// `B = ‖Ω − Ω̄‖²` over the `(N/2 + 1)`-dimensional Toeplitz block, with
/// `Ω̄` built from the replicate-averaged unbiased sample ACV (lags
/// `0..=N/2`) normalised by its lag-0 value.
pub fn b_score(series: &[Vec<f64>], rho: &[f64]) -> Result<f64> {
    let n = series.first().map(Vec::len).ok_or_else(|| Error::InvalidArgument("no series".into()))?;
    let lags = n / 2;
    if rho.len() <= lags {
        return Err(Error::DimensionMismatch(format!("need exact correlations to lag {lags}")));
    }
    let mut avg = vec![0.0; lags + 1];
    for x in series {
        if x.len() != n {
            return Err(Error::DimensionMismatch("series lengths differ".into()));
        }
        for (a, v) in avg.iter_mut().zip(sample_acv(x, lags, AcvEstimator::Unbiased)?) {
            *a += v;
        }
    }
    if !(avg[0] > 0.0) {
        return Err(Error::ZeroVariance(0));
    }
    let dim = lags + 1;
    Ok((1..dim)
        .map(|h| {
            let diff = rho[h] / rho[0] - avg[h] / avg[0];
            2.0 * (dim - h) as f64 * diff * diff
        })
        .sum())
}

/// Simulated `(B, B_pen)` for a packet basis with `M` replicates.
pub fn score_b(
    process: &ExactProcess,
    tree: &WpTree,
    filter: &QmfPair,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    let variances = leaf_variances(&process.model, tree, BETA_TOL)?;
    let series = simulate_wp_with(tree, filter, &variances, seed, replicates)?;
    let b = b_score(&series, &process.rho())?;
    Ok((b, b + process.lambda * tree.leaf_count() as f64))
}

/// `B` for exact (Hosking) simulations: the sampling-error floor.
pub fn score_b_hosking(process: &ExactProcess, replicates: usize, seed: u64) -> Result<f64> {
    let series = simulate_hosking_acv(&process.acv.gamma, process.n(), seed, replicates)?;
    b_score(&series, &process.rho())
}

/// Vanishing moments of the packet at index `p`: `q` per set bit, `1` for
/// the scaling packet.
pub fn vanishing_r(p: u64, j: u32, q: usize) -> u32 {
    debug_assert!(j >= 63 || p < 1u64 << j);
    if p == 0 {
        1
    } else {
        q as u32 * p.count_ones()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayCase {
    BothDetail,
    OneScaling,
    BothScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub first: (u32, u64),
    pub second: (u32, u64),
    pub r1: u32,
    pub r2: u32,
    pub case: DecayCase,
    /// Predicted exponent of `|α|` in the covariance bound.
    pub predicted: f64,
    /// Pairs need `|α| > (N* + 1)(2^j1 + 2^j2)`.
    pub support_radius: u64,
}

pub fn predict_decay(d: f64, first: WpNode, second: WpNode, q: usize, n_star: u64) -> DecayPrediction {
    let r1 = vanishing_r(first.p, first.j, q);
    let r2 = vanishing_r(second.p, second.j, q);
    let base = 2.0 * d - 1.0;
    let (case, predicted) = match (first.p == 0, second.p == 0) {
        (false, false) => (DecayCase::BothDetail, base - (r1 + r2) as f64),
        (true, true) => (DecayCase::BothScaling, base),
        _ => (DecayCase::OneScaling, base - r1.max(r2) as f64),
    };
    DecayPrediction {
        first: (first.j, first.p),
        second: (second.j, second.p),
        r1,
        r2,
        case,
        predicted,
        support_radius: (n_star + 1) * ((1u64 << first.j) + (1u64 << second.j)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    pub prediction: DecayPrediction,
    pub fitted: f64,
    pub pairs: usize,
}

/// Below this fraction of the largest diagonal entry a covariance counts as
/// rounding noise and is left out of the fit.
pub const DECAY_FLOOR: f64 = 1e-12;

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (mx / n, my / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        sxy += (x.ln() - mx) * (y.ln() - my);
        sxx += (x.ln() - mx).powi(2);
    }
    sxy / sxx
}

/// Fits the decay exponent of `|Cov(W_{j1}^{p1}(k1), W_{j2}^{p2}(k2))|` in
/// the circular lag `α` over admissible pairs. Covariances are reduced to
/// their maximum per `α`, then to local peaks in `α` so that the oscillation
/// at the Gegenbauer frequency does not bias the slope.
pub fn fit_decay(
    gamma_b: &DMatrix<f64>,
    tree: &WpTree,
    first: WpNode,
    second: WpNode,
    radius: u64,
) -> Result<(f64, usize)> {
    let n = tree.len() as u64;
    let offsets = tree.offsets();
    let index = |node: WpNode| tree.leaves().iter().position(|l| *l == node);
    let (i1, i2) = match (index(first), index(second)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument(format!("{first} and {second} must be leaves"))),
    };
    let floor = DECAY_FLOOR * gamma_b.diagonal().amax();
    let mut by_alpha: BTreeMap<u64, f64> = BTreeMap::new();
    let mut pairs = 0;
    for k1 in 0..n >> first.j {
        for k2 in 0..n >> second.j {
            let raw = ((k1 << first.j) as i64 - (k2 << second.j) as i64).rem_euclid(n as i64) as u64;
            let alpha = raw.min(n - raw);
            if alpha <= radius {
                continue;
            }
            let c = gamma_b[(offsets[i1] + k1 as usize, offsets[i2] + k2 as usize)].abs();
            pairs += 1;
            if c > floor {
                let e = by_alpha.entry(alpha).or_insert(0.0);
                *e = e.max(c);
            }
        }
    }
    let pts: Vec<(f64, f64)> = by_alpha.iter().map(|(&a, &c)| (a as f64, c)).collect();
    let peaks: Vec<(f64, f64)> = (0..pts.len())
        .filter(|&i| {
            let left = i == 0 || pts[i - 1].1 <= pts[i].1;
            let right = i + 1 == pts.len() || pts[i + 1].1 <= pts[i].1;
            left && right
        })
        .map(|i| pts[i])
        .collect();
    let use_pts = if peaks.len() >= 3 { peaks } else { pts };
    if use_pts.len() < 3 {
        return Err(Error::InsufficientPairs(format!(
            "{first}-{second}: {} usable lags beyond radius {radius}",
            use_pts.len()
        )));
    }
    Ok((loglog_slope(&use_pts), pairs))
}

/// Checks every leaf pair of `tree` (including a leaf with itself) that has
/// admissible coefficient pairs against the predicted decay exponent.
pub fn decay_check(model: &GegenbauerModel, filter: &QmfPair, tree: &WpTree, tol: f64) -> Result<Vec<DecayResult>> {
    if model.k() != 1 {
        return Err(Error::InvalidModel("the decay check applies to 1-factor models".into()));
    }
    let d = model.factors()[0].d;
    let process = ExactProcess::new(model, tree.len(), tol)?;
    let gb = wp_covariance(&process.gamma, tree, filter)?;
    decay_check_matrix(&gb, d, filter, tree)
}

/// As [`decay_check`] on a precomputed `Γ[B]`.
pub fn decay_check_matrix(gamma_b: &DMatrix<f64>, d: f64, filter: &QmfPair, tree: &WpTree) -> Result<Vec<DecayResult>> {
    let n_star = filter.n_star().unsigned_abs();
    let leaves = tree.leaves();
    let mut out = Vec::new();
    for (a, &first) in leaves.iter().enumerate() {
        for &second in &leaves[a..] {
            let prediction = predict_decay(d, first, second, filter.q, n_star);
            match fit_decay(gamma_b, tree, first, second, prediction.support_radius) {
                Ok((fitted, pairs)) => out.push(DecayResult { prediction, fitted, pairs }),
                Err(Error::InsufficientPairs(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientPairs(format!(
            "no leaf pair of a {}-leaf tree at N = {} satisfies the support condition",
            tree.leaf_count(),
            tree.len()
        )));
    }
    Ok(out)
}

/// Basis construction compared in the score tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisMethod {
    Ours,
    Whitcher,
}

impl BasisMethod {
    pub fn name(self) -> &'static str {
        match self {
            BasisMethod::Ours => "ours",
            BasisMethod::Whitcher => "whitcher",
        }
    }

    pub fn build(self, nus: &[Frequency], filter: &QmfPair, depth: u32) -> Result<WpTree> {
        match self {
            BasisMethod::Ours => best_basis_kfactor(nus, depth),
            BasisMethod::Whitcher => whitcher_basis(nus, filter, depth, WHITCHER_THRESHOLD),
        }
    }
}

impl std::fmt::Display for BasisMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ours" => Ok(BasisMethod::Ours),
            "whitcher" => Ok(BasisMethod::Whitcher),
            _ => Err(Error::InvalidArgument(format!("unknown basis method '{s}' (ours, whitcher)"))),
        }
    }
}

/// One of the four benchmark processes of the score tables.
#[derive(Debug, Clone)]
pub struct TableProcess {
    pub id: usize,
    pub factors: Vec<(f64, Frequency)>,
}

impl TableProcess {
    pub fn model(&self) -> Result<GegenbauerModel> {
        GegenbauerModel::new(
            self.factors.iter().map(|(d, nu)| (*d, nu.value())).collect(),
            crate::gegenbauer::DEFAULT_SIGMA2,
        )
    }

    pub fn frequencies(&self) -> Vec<Frequency> {
        self.factors.iter().map(|f| f.1).collect()
    }

    pub fn label(&self) -> String {
        self.factors.iter().map(|(d, nu)| format!("({d},{nu})")).collect::<Vec<_>>().join("-")
    }
}

pub fn table_processes() -> Vec<TableProcess> {
    let r = |a, b| Frequency::rational(a, b).expect("valid table frequency");
    vec![
        TableProcess { id: 1, factors: vec![(0.4, r(1, 12))] },
        TableProcess { id: 2, factors: vec![(0.2, r(1, 12))] },
        TableProcess { id: 3, factors: vec![(0.3, r(16, 1000))] },
        TableProcess { id: 4, factors: vec![(0.3, r(1, 40)), (0.3, r(1, 5))] },
    ]
}
