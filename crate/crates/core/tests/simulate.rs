mod common;

use wpgegen::bestbasis::{best_basis_1factor, Frequency};
use wpgegen::filters::{make_filter, Family};
use wpgegen::gegenbauer::{autocovariance, GegenbauerModel, ACV_TOL, BETA_TOL, DEFAULT_SIGMA2};
use wpgegen::simulate::*;
use wpgegen::wpt::{analyze, WpTree};

fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = xs.collect();
    let n = v.len();
    let m = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, var, n)
}

fn process1() -> (GegenbauerModel, WpTree) {
    let model = GegenbauerModel::single(0.4, 1.0 / 12.0).unwrap();
    let tree = best_basis_1factor(&"1/12".parse::<Frequency>().unwrap(), 8).unwrap();
    (model, tree)
}

#[test]
fn white_noise_root_tree() {
    let model = GegenbauerModel::white_noise(DEFAULT_SIGMA2).unwrap();
    let filter = make_filter(Family::Daubechies, 4).unwrap();
    let cfg = SimConfig::new(model, WpTree::root(8), filter, 5, 256).unwrap();
    let out = simulate_wp(&cfg).unwrap();
    let (m, var, n) = mean_var(out.into_iter().flatten());
    assert_eq!(n, 1 << 16);
    let se = (2.0 / n as f64).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "variance {var}");
    assert!(m.abs() < 3.0 / (n as f64).sqrt());
}

#[test]
fn same_seed_same_output_any_thread_count() {
    let (model, tree) = process1();
    let filter = make_filter(Family::Symmlet, 8).unwrap();
    let cfg = SimConfig::new(model.clone(), tree, filter, 42, 8).unwrap();
    let a = simulate_wp(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| simulate_wp(&cfg).unwrap());
    assert_eq!(a, b);
    let h1 = simulate_hosking(&model, 64, 42, 4).unwrap();
    let h2 = pool.install(|| simulate_hosking(&model, 64, 42, 4).unwrap());
    assert_eq!(h1, h2);
    let other = SimConfig { seed: 43, ..cfg };
    assert_ne!(a, simulate_wp(&other).unwrap());
}

#[test]
fn hosking_bivariate_conditioning() {
    let draws = simulate_hosking_acv(&[1.0, 0.5], 2, 9, 100_000).unwrap();
    let (m, var, n) = mean_var(draws.iter().map(|x| x[1] - 0.5 * x[0]));
    let se_m = (0.75 / n as f64).sqrt();
    let se_v = 0.75 * (2.0 / n as f64).sqrt();
    assert!(m.abs() < 3.0 * se_m);
    assert!((var - 0.75).abs() < 3.0 * se_v, "conditional variance {var}");
}

#[test]
fn hosking_white_noise_matches_wp_root() {
    let model = GegenbauerModel::white_noise(DEFAULT_SIGMA2).unwrap();
    let filter = make_filter(Family::Daubechies, 2).unwrap();
    let wp = simulate_wp(&SimConfig::new(model.clone(), WpTree::root(8), filter, 1, 64).unwrap()).unwrap();
    let hk = simulate_hosking(&model, 256, 1, 64).unwrap();
    let (_, v1, n1) = mean_var(wp.into_iter().flatten());
    let (_, v2, n2) = mean_var(hk.into_iter().flatten());
    // Two-sided variance-ratio test at α = 0.01 (log-ratio normal approximation).
    let z = (v1 / v2).ln() / (2.0 / n1 as f64 + 2.0 / n2 as f64).sqrt();
    assert!(z.abs() < 2.576, "z = {z}");
}

#[test]
fn wp_output_variance_matches_gamma0() {
    let (model, tree) = process1();
    let filter = make_filter(Family::Daubechies, 10).unwrap();
    let cfg = SimConfig::new(model.clone(), tree.clone(), filter.clone(), 7, 500).unwrap();
    let out = simulate_wp(&cfg).unwrap();
    let g0 = autocovariance(&model, 0, ACV_TOL).unwrap().gamma[0];
    let mean_sample_var = out
        .iter()
        .map(|x| sample_acv(x, 0, AcvEstimator::Biased).unwrap()[0])
        .sum::<f64>()
        / out.len() as f64;
    assert!((mean_sample_var / g0 - 1.0).abs() < 0.05);

    // Re-analysis recovers the per-leaf coefficient variances.
    let variances = leaf_variances(&model, &tree, BETA_TOL).unwrap();
    let mut sums = vec![0.0; tree.leaf_count()];
    for x in &out {
        let w = analyze(x, &tree, &filter).unwrap();
        for (s, b) in sums.iter_mut().zip(w.blocks()) {
            *s += b.iter().map(|c| c * c).sum::<f64>();
        }
    }
    for ((leaf, s), v) in tree.leaves().iter().zip(&sums).zip(&variances) {
        let count = (out.len() << (8 - leaf.j)) as f64;
        let est = s / count;
        let tol = 0.05f64.max(4.0 * (2.0 / count).sqrt());
        assert!((est / v - 1.0).abs() < tol, "leaf {leaf}: {est} vs {v}");
    }
}

#[test]
fn replicates_are_uncorrelated() {
    let (model, tree) = process1();
    let filter = make_filter(Family::Daubechies, 10).unwrap();
    let out = simulate_wp(&SimConfig::new(model, tree, filter, 11, 2).unwrap()).unwrap();
    let (a, b) = (&out[0], &out[1]);
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((dot / (na * nb)).abs() < 0.2);
}

#[test]
fn averaged_acf_oscillates_with_period_12() {
    let (model, tree) = process1();
    let filter = make_filter(Family::Daubechies, 10).unwrap();
    let out = simulate_wp(&SimConfig::new(model, tree, filter, 3, 200).unwrap()).unwrap();
    let mut acf = vec![0.0; 61];
    for x in &out {
        for (a, v) in acf.iter_mut().zip(sample_acv(x, 60, AcvEstimator::Unbiased).unwrap()) {
            *a += v;
        }
    }
    // Peaks of the averaged ACF near multiples of 12.
    for k in 1..5 {
        let h = 12 * k;
        assert!(acf[h] > acf[h - 6] && acf[h] > acf[h + 6], "lag {h}");
    }
}

#[test]
fn white_noise_acf_bound() {
    let mut gamma = vec![0.0; 4096];
    gamma[0] = 1.0;
    let x = simulate_hosking_acv(&gamma, 4096, 2, 1).unwrap().remove(0);
    let acv = sample_acv(&x, 1, AcvEstimator::Unbiased).unwrap();
    assert!((acv[1] / acv[0]).abs() < 3.0 / 64.0);
}
