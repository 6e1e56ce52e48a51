mod common;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpgegen::analysis::*;
use wpgegen::bestbasis::{best_basis_1factor, Frequency};
use wpgegen::filters::{make_filter, Family};
use wpgegen::gegenbauer::{GegenbauerModel, ACV_TOL};
use wpgegen::wpt::WpTree;
use wpgegen::Error;

use common::{node, random_tree};

fn process1() -> GegenbauerModel {
    GegenbauerModel::single(0.4, 1.0 / 12.0).unwrap()
}

#[test]
fn identity_covariance_stays_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for fam in Family::ALL {
        let f = make_filter(fam, fam.max_order()).unwrap();
        let tree = random_tree(6, 0.3, &mut rng);
        let gb = wp_covariance(&DMatrix::identity(64, 64), &tree, &f).unwrap();
        assert!((gb - DMatrix::<f64>::identity(64, 64)).amax() < 1e-8, "{fam:?}");
    }
}

#[test]
fn root_tree_is_identity_transform_and_trace_is_preserved() {
    let p = ExactProcess::new(&process1(), 64, ACV_TOL).unwrap();
    let f = make_filter(Family::Daubechies, 10).unwrap();
    let root = wp_covariance(&p.gamma, &WpTree::root(6), &f).unwrap();
    assert!((&root - &p.gamma).amax() < 1e-12);

    let tree = best_basis_1factor(&Frequency::rational(1, 12).unwrap(), 6).unwrap();
    let gb = wp_covariance(&p.gamma, &tree, &f).unwrap();
    assert!(((gb.trace() - p.gamma.trace()) / p.gamma.trace()).abs() < 1e-8);
    assert_eq!(gb, gb.transpose());
    assert!(matches!(wp_covariance(&p.gamma, &WpTree::root(5), &f), Err(Error::DimensionMismatch(_))));
}

#[test]
fn residual_correlation_concentrates_near_the_singularity() {
    let p = ExactProcess::new(&process1(), 64, ACV_TOL).unwrap();
    let f = make_filter(Family::Daubechies, 10).unwrap();
    let tree = best_basis_1factor(&Frequency::rational(1, 12).unwrap(), 6).unwrap();
    let omega = correlation_from_covariance(&wp_covariance(&p.gamma, &tree, &f).unwrap()).unwrap();
    let offsets = tree.offsets();
    // Off-diagonal mass per leaf block; the heaviest block touches 1/12.
    let mut mass = vec![0.0; tree.leaf_count()];
    for (b, leaf) in tree.leaves().iter().enumerate() {
        let len = 64 >> leaf.j;
        for i in offsets[b]..offsets[b] + len {
            for j in 0..64 {
                if i != j {
                    mass[b] += omega[(i, j)].powi(2);
                }
            }
        }
        mass[b] /= len as f64;
    }
    let heaviest = (0..mass.len()).max_by(|&a, &b| mass[a].total_cmp(&mass[b])).unwrap();
    let (lo, hi) = tree.leaves()[heaviest].band();
    let width = hi - lo;
    assert!(lo - width <= 1.0 / 12.0 && 1.0 / 12.0 <= hi + width, "heaviest leaf {}", tree.leaves()[heaviest]);
}

#[test]
fn toeplitz_correlation_is_rho() {
    let p = ExactProcess::new(&process1(), 32, ACV_TOL).unwrap();
    let rho = p.rho();
    for i in 0..32 {
        for j in 0..32 {
            assert!((p.omega[(i, j)] - rho[i.abs_diff(j)]).abs() < 1e-14);
        }
    }
}

#[test]
fn scores_are_scale_invariant() {
    let f = make_filter(Family::Symmlet, 8).unwrap();
    let tree = best_basis_1factor(&Frequency::rational(1, 12).unwrap(), 7).unwrap();
    let a = ExactProcess::new(&process1(), 128, ACV_TOL).unwrap();
    let scaled = GegenbauerModel::new(vec![(0.4, 1.0 / 12.0)], 3.7).unwrap();
    let b = ExactProcess::new(&scaled, 128, ACV_TOL).unwrap();
    assert!((a.lambda - b.lambda).abs() < 1e-8 * a.lambda);
    let sa = score_s_exact(&a, &tree, &f, "ours").unwrap();
    let sb = score_s_exact(&b, &tree, &f, "ours").unwrap();
    assert!((sa.s - sb.s).abs() < 1e-8 * sa.s);
    let (ba, _) = score_b(&a, &tree, &f, 20, 5).unwrap();
    let (bb, _) = score_b(&b, &tree, &f, 20, 5).unwrap();
    assert!((ba - bb).abs() < 1e-8 * ba.max(1.0));
}

#[test]
fn white_noise_scores_vanish() {
    let m = GegenbauerModel::white_noise(2.0).unwrap();
    let p = ExactProcess::new(&m, 64, ACV_TOL).unwrap();
    assert!(p.lambda < 1e-20);
    let f = make_filter(Family::Coiflet, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tree = random_tree(6, 0.4, &mut rng);
    let r = score_s_exact(&p, &tree, &f, "random").unwrap();
    assert!(r.hs_error < 1e-12);
    assert!((r.s - r.lambda * r.leaf_count as f64).abs() < 1e-12);
}

#[test]
fn white_noise_b_within_exact_null() {
    let m = GegenbauerModel::white_noise(1.0).unwrap();
    let p = ExactProcess::new(&m, 64, ACV_TOL).unwrap();
    let mut null: Vec<f64> = (0..200).map(|s| score_b_hosking(&p, 10, s).unwrap()).collect();
    null.sort_by(f64::total_cmp);
    let q99 = null[197];
    let f = make_filter(Family::Daubechies, 6).unwrap();
    let tree = best_basis_1factor(&Frequency::rational(1, 5).unwrap(), 6).unwrap();
    let (b, b_pen) = score_b(&p, &tree, &f, 10, 1000).unwrap();
    assert!(b < q99, "B = {b}, null 99% = {q99}");
    assert!((b_pen - b).abs() < 1e-12);
}

#[test]
fn b_score_is_deterministic() {
    let p = ExactProcess::new(&process1(), 64, ACV_TOL).unwrap();
    let f = make_filter(Family::Daubechies, 4).unwrap();
    let tree = best_basis_1factor(&Frequency::rational(1, 12).unwrap(), 6).unwrap();
    assert_eq!(score_b(&p, &tree, &f, 8, 42).unwrap(), score_b(&p, &tree, &f, 8, 42).unwrap());
    assert_ne!(score_b(&p, &tree, &f, 8, 42).unwrap(), score_b(&p, &tree, &f, 8, 43).unwrap());
}

#[test]
fn process1_db10_score() {
    let p = ExactProcess::new(&process1(), 256, ACV_TOL).unwrap();
    assert!((p.lambda / 20.7084 - 1.0).abs() < 0.02, "lambda {}", p.lambda);
    let f = make_filter(Family::Daubechies, 10).unwrap();
    let tree = best_basis_1factor(&Frequency::rational(1, 12).unwrap(), 8).unwrap();
    let r = score_s_exact(&p, &tree, &f, "ours").unwrap();
    assert!((r.s / 308.2 - 1.0).abs() < 0.1, "S {}", r.s);
    assert!((r.s - (r.hs_error + r.lambda * r.leaf_count as f64)).abs() < 1e-9);
}

#[test]
fn table_scores_decrease_with_q_and_beat_the_identity() {
    for tp in table_processes() {
        let p = ExactProcess::new(&tp.model().unwrap(), 256, ACV_TOL).unwrap();
        let root_hs = p.lambda * 255.0;
        for fam in Family::ALL {
            let scores: Vec<f64> = fam
                .table_orders()
                .iter()
                .map(|&q| {
                    let f = make_filter(fam, q).unwrap();
                    let tree = BasisMethod::Ours.build(&tp.frequencies(), &f, 8).unwrap();
                    let r = score_s_exact(&p, &tree, &f, "ours").unwrap();
                    assert!(r.hs_error <= root_hs, "process {} {fam:?} {q}", tp.id);
                    r.s
                })
                .collect();
            let inversions = scores.windows(2).filter(|w| w[1] >= w[0]).count();
            assert!(inversions <= 1, "process {} {fam:?}: {scores:?}", tp.id);
        }
    }
}

#[test]
fn decay_consistency_scaling_pair_haar() {
    let m = GegenbauerModel::single(0.3, 0.016).unwrap();
    let f = make_filter(Family::Daubechies, 1).unwrap();
    let tree = WpTree::new(10, vec![node(2, 0), node(2, 1), node(2, 2), node(2, 3)]).unwrap();
    let res = decay_check(&m, &f, &tree, ACV_TOL).unwrap();
    let scaling = res.iter().find(|r| r.prediction.case == DecayCase::BothScaling).unwrap();
    assert!((scaling.prediction.predicted + 0.4).abs() < 1e-12);
    assert!((scaling.fitted - scaling.prediction.predicted).abs() < 0.3, "fitted {}", scaling.fitted);
}

#[test]
fn decay_consistency_detail_pairs_faster_at_zero_frequency() {
    // At ν = 0 the vanishing moments suppress the singularity in every
    // detail packet, so detail pairs decay faster than the scaling pair.
    let m = GegenbauerModel::single(0.2, 0.0).unwrap();
    let f = make_filter(Family::Daubechies, 4).unwrap();
    let tree = WpTree::new(10, vec![node(2, 0), node(2, 1), node(2, 2), node(2, 3)]).unwrap();
    let res = decay_check(&m, &f, &tree, ACV_TOL).unwrap();
    let scaling = res.iter().find(|r| r.prediction.case == DecayCase::BothScaling).unwrap().fitted;
    for r in res.iter().filter(|r| r.prediction.case == DecayCase::BothDetail) {
        assert!(r.fitted < scaling - 1.0, "{:?}: {} vs {scaling}", r.prediction.first, r.fitted);
    }
}

#[test]
fn decay_needs_admissible_pairs() {
    let m = GegenbauerModel::single(0.3, 0.1).unwrap();
    let f = make_filter(Family::Daubechies, 10).unwrap();
    assert!(matches!(decay_check(&m, &f, &WpTree::wavelet(5), ACV_TOL), Err(Error::InsufficientPairs(_))));
    let two = GegenbauerModel::new(vec![(0.3, 0.1), (0.2, 0.3)], 1.0).unwrap();
    assert!(matches!(decay_check(&two, &f, &WpTree::wavelet(5), ACV_TOL), Err(Error::InvalidModel(_))));
}
