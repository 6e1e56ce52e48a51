//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], ...`.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

pub const MAX_INTERVALS: usize = 50_000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One K21 panel on `[a, b]`: (estimate, error estimate, integral of |f|).
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = fc.abs() * WGK[10];
    let mut vals = [(0.0, 0.0); 10];
    for i in 0..10 {
        let dx = half * XGK[i];
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        vals[i] = (f1, f2);
        resk += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            resg += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for i in 0..10 {
        resasc += WGK[i] * ((vals[i].0 - mean).abs() + (vals[i].1 - mean).abs());
    }
    let (resk, resabs, resasc) = (resk * half, resabs * half.abs(), resasc * half.abs());
    let mut err = (resk - resg * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (resk, err, resabs)
}

/// Integrates `sum_k int_{a_k}^{b_k} f(k, x) dx` over several pieces with one
/// shared error budget. Bisection targets the worst segment until the total
/// error estimate is at most `rel_tol * max(|I|, int |f|)`.
pub fn integrate_pieces<F>(f: F, pieces: &[(f64, f64)], rel_tol: f64) -> Result<f64>
where
    F: Fn(usize, f64) -> f64,
{
    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err, mut total_abs) = (0.0, 0.0, 0.0);
    for (k, &(a, b)) in pieces.iter().enumerate() {
        if a == b {
            continue;
        }
        let g = |x: f64| f(k, x);
        let (value, error, abs) = kronrod(&g, a, b);
        total += value;
        total_err += error;
        total_abs += abs;
        heap.push(Segment { piece: k, a, b, value, error, abs });
    }
    // Accuracy below accumulated rounding is not demanded.
    let target = |total: f64, abs: f64| (rel_tol * total.abs().max(abs)).max(100.0 * f64::EPSILON * abs);
    while total_err > target(total, total_abs) || !total_err.is_finite() {
        if heap.len() >= MAX_INTERVALS || !total.is_finite() {
            return Err(Error::QuadratureFailure { tol: rel_tol, estimate: total, error: total_err });
        }
        let worst = heap.pop().expect("heap is non-empty while error is positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution.
            return Err(Error::QuadratureFailure { tol: rel_tol, estimate: total, error: total_err });
        }
        let g = |x: f64| f(worst.piece, x);
        let left = kronrod(&g, worst.a, mid);
        let right = kronrod(&g, mid, worst.b);
        total += left.0 + right.0 - worst.value;
        total_err += left.1 + right.1 - worst.error;
        total_abs += left.2 + right.2 - worst.abs;
        for (a, b, (value, error, abs)) in [(worst.a, mid, left), (mid, worst.b, right)] {
            heap.push(Segment { piece: worst.piece, a, b, value, error, abs });
        }
        // Re-sum periodically to stop drift from the running updates.
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
            total_abs = heap.iter().map(|s| s.abs).sum();
        }
    }
    Ok(heap.iter().map(|s| s.value).sum())
}

/// Adaptive integral of `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_pieces(|_, x| f(x), &[(a, b)], rel_tol)
}
