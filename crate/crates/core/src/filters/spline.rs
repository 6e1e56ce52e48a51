//! Battle-Lemarié (orthonormalised B-spline) low-pass filters.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::sync::OnceLock;

const GRID: usize = 1 << 14;
const TRUNCATION: f64 = 1e-9;

/// Centred cardinal B-spline of degree `n` evaluated at `x`.
fn centred_bspline(n: usize, x: f64) -> f64 {
    if n == 0 {
        return if x.abs() < 0.5 {
            1.0
        } else if x.abs() == 0.5 {
            0.5
        } else {
            0.0
        };
    }
    let half = (n + 1) as f64 / 2.0;
    if x.abs() >= half {
        return 0.0;
    }
    ((x + half) * centred_bspline(n - 1, x + 0.5) + (half - x) * centred_bspline(n - 1, x - 0.5))
        / n as f64
}

/// Returns the low-pass filter and its first index for `q` vanishing
/// moments (spline degree `q - 1`, odd so that the filter is symmetric
/// about zero).
pub(super) fn battle_lemarie(q: usize) -> (Vec<f64>, i64) {
    static CACHE: [OnceLock<(Vec<f64>, i64)>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    match q {
        2 | 4 | 6 => CACHE[q / 2 - 1].get_or_init(|| compute(q)).clone(),
        _ => compute(q),
    }
}

fn compute(q: usize) -> (Vec<f64>, i64) {
    let degree = q - 1;
    // Autocorrelation of the degree-m spline: samples of the degree-(2m+1)
    // spline at the integers.
    let auto_degree = 2 * degree + 1;
    let reach = auto_degree.div_ceil(2);
    let samples: Vec<f64> = (0..=reach).map(|k| centred_bspline(auto_degree, k as f64)).collect();
    let autocorr = |w: f64| {
        samples
            .iter()
            .enumerate()
            .map(|(k, &b)| if k == 0 { b } else { 2.0 * b * (k as f64 * w).cos() })
            .sum::<f64>()
    };

    let mut spectrum: Vec<Complex<f64>> = (0..GRID)
        .map(|k| {
            let w = 2.0 * std::f64::consts::PI * k as f64 / GRID as f64;
            let c = (w / 2.0).cos().abs().powi(q as i32);
            let h = std::f64::consts::SQRT_2 * c * (autocorr(w) / autocorr(2.0 * w)).sqrt();
            Complex::new(h, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(GRID).process(&mut spectrum);

    let coeff = |n: i64| spectrum[n.rem_euclid(GRID as i64) as usize].re / GRID as f64;
    let half = (GRID / 2) as i64;
    let reach = (1..half)
        .rev()
        .find(|&n| coeff(n).abs() >= TRUNCATION || coeff(-n).abs() >= TRUNCATION)
        .unwrap_or(0);
    let mut h: Vec<f64> = (-reach..=reach).map(coeff).collect();
    polish_orthonormal(&mut h);
    // Rescale each polyphase component to sum to 1/sqrt(2), fixing
    // sum h = sqrt(2) and H(1/2) = 0 to rounding.
    for parity in 0..2 {
        let idx = |i: usize| (i as i64 - reach).rem_euclid(2) == parity;
        let sum: f64 = h.iter().enumerate().filter(|(i, _)| idx(*i)).map(|(_, c)| c).sum();
        let scale = std::f64::consts::FRAC_1_SQRT_2 / sum;
        h.iter_mut().enumerate().filter(|(i, _)| idx(*i)).for_each(|(_, c)| *c *= scale);
    }
    (h, -reach)
}

/// Minimum-norm Gauss-Newton correction onto the double-shift orthonormality
/// constraints plus a zero at the Nyquist frequency. The truncated filter is
/// within ~1e-9 of the constraint set, so the correction is of that size.
fn polish_orthonormal(h: &mut [f64]) {
    let len = h.len();
    let shifts = len / 2 + 1;
    let rows = shifts + 1;
    let mut last = f64::INFINITY;
    for _ in 0..8 {
        let mut jac = DMatrix::<f64>::zeros(rows, len);
        let mut resid = DVector::<f64>::zeros(rows);
        for m in 0..shifts {
            let s = 2 * m;
            let mut acc = 0.0;
            for n in s..len {
                acc += h[n] * h[n - s];
                jac[(m, n)] += h[n - s];
                jac[(m, n - s)] += h[n];
            }
            resid[m] = acc - if m == 0 { 1.0 } else { 0.0 };
        }
        let alt = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        resid[shifts] = h.iter().enumerate().map(|(n, c)| alt(n) * c).sum();
        for n in 0..len {
            jac[(shifts, n)] = alt(n);
        }
        // Components along negligible singular directions (tail-tail
        // products) stall near 1e-11; stop once progress does.
        if resid.amax() > 0.5 * last {
            break;
        }
        last = resid.amax();
        // Rows are linearly dependent for symmetric filters; the SVD gives
        // the minimum-norm least-squares step.
        let svd = jac.svd(true, true);
        let cutoff = 1e-6 * svd.singular_values.max();
        let Ok(delta) = svd.solve(&resid, cutoff) else {
            break;
        };
        for (c, d) in h.iter_mut().zip(delta.iter()) {
            *c -= d;
        }
        for i in 0..len / 2 {
            let mean = 0.5 * (h[i] + h[len - 1 - i]);
            h[i] = mean;
            h[len - 1 - i] = mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for n in [1, 3, 5, 11] {
            for x in [0.0, 0.25, 0.5, 0.9] {
                let s: f64 = (-8..=8).map(|k| centred_bspline(n, x + k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "degree {n} at {x}: {s}");
            }
        }
        assert!((centred_bspline(1, 0.0) - 1.0).abs() < 1e-15);
        assert!((centred_bspline(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_about_zero() {
        for q in [2, 4, 6] {
            let (h, start) = battle_lemarie(q);
            assert_eq!(start, -((h.len() as i64 - 1) / 2));
            for i in 0..h.len() / 2 {
                assert!((h[i] - h[h.len() - 1 - i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn truncated_support_lengths() {
        // Longer splines decay more slowly; lengths fixed by the 1e-9 cut.
        let lens: Vec<usize> = [2, 4, 6].iter().map(|&q| battle_lemarie(q).0.len()).collect();
        assert_eq!(lens, vec![55, 113, 167]);
    }
}
