//! C ABI for `wpgegen`.
//!
//! Objects are opaque handles created by `wpg_*_new`/`wpg_basis_*` and
//! released with the matching `wpg_*_free`. Every fallible call returns a
//! `WpgStatus`; on failure `wpg_last_error` describes the error of the most
//! recent failing call on the current thread. Output buffers are caller
//! allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wpgegen::analysis::{score_s_exact, ExactProcess};
use wpgegen::bestbasis::{best_basis_kfactor, whitcher_basis, Frequency};
use wpgegen::filters::{parse_filter, QmfPair};
use wpgegen::gegenbauer::{autocovariance, GegenbauerModel, ACV_TOL};
use wpgegen::simulate::{simulate_hosking, simulate_wp, SimConfig};
use wpgegen::wpt::{analyze, synthesize, WpCoefficients, WpTree};
use wpgegen::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedFilter = 3,
    LengthMismatch = 4,
    InvalidTree = 5,
    InvalidModel = 6,
    InvalidFrequency = 7,
    DuplicateFrequency = 8,
    SingularFrequency = 9,
    BasisNotFound = 10,
    QuadratureFailure = 11,
    NonPositiveDefinite = 12,
    DimensionMismatch = 13,
    ZeroVariance = 14,
    InsufficientPairs = 15,
    BufferTooSmall = 16,
    Panic = 17,
}

/// Gegenbauer model handle.
pub struct WpgModel {
    inner: GegenbauerModel,
}

/// Filter pair handle.
pub struct WpgFilter {
    inner: QmfPair,
}

/// Packet tree handle.
pub struct WpgTree {
    inner: WpTree,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> WpgStatus {
    match e {
        Error::UnsupportedFamilyOrder { .. } => WpgStatus::UnsupportedFilter,
        Error::LengthMismatch { .. } => WpgStatus::LengthMismatch,
        Error::InvalidTree(_) => WpgStatus::InvalidTree,
        Error::InvalidModel(_) => WpgStatus::InvalidModel,
        Error::SingularFrequency(_) => WpgStatus::SingularFrequency,
        Error::QuadratureFailure { .. } => WpgStatus::QuadratureFailure,
        Error::InvalidFrequency(_) => WpgStatus::InvalidFrequency,
        Error::DuplicateFrequency(_) => WpgStatus::DuplicateFrequency,
        Error::BasisNotFound(_) => WpgStatus::BasisNotFound,
        Error::NonPositiveDefinite { .. } => WpgStatus::NonPositiveDefinite,
        Error::DimensionMismatch(_) => WpgStatus::DimensionMismatch,
        Error::ZeroVariance(_) => WpgStatus::ZeroVariance,
        Error::InsufficientPairs(_) => WpgStatus::InsufficientPairs,
        Error::InvalidArgument(_) => WpgStatus::InvalidArgument,
    }
}

struct Fail(WpgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(WpgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WpgStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (WpgStatus::Ok, String::new()),
        Ok(Err(Fail(s, m))) => (s, m),
        Err(_) => (WpgStatus::Panic, "internal panic".to_string()),
    };
    if status != WpgStatus::Ok {
        LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    }
    status
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WpgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn set_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn frequencies(nu: *const f64, k: usize) -> Result<Vec<Frequency>, Fail> {
    Ok(input(nu, k, "nu")?.iter().map(|&v| Frequency::new(v)).collect::<Result<_, _>>()?)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wpg_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wpg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Model with `k` factors `(d[i], nu[i])` (nu in cycles/sample) and
/// innovation variance `sigma2`.
///
/// # Safety
/// `d` and `nu` must point to `k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wpg_model_new(
    d: *const f64,
    nu: *const f64,
    k: usize,
    sigma2: f64,
    out: *mut *mut WpgModel,
) -> WpgStatus {
    guard(|| {
        let d = input(d, k, "d")?;
        let nu = input(nu, k, "nu")?;
        let inner = GegenbauerModel::new(d.iter().copied().zip(nu.iter().copied()).collect(), sigma2)?;
        set_out(out, WpgModel { inner })
    })
}

/// # Safety
/// `model` must come from `wpg_model_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpg_model_free(model: *mut WpgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Power spectral density at `lambda` (cycles/sample).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_model_psd(model: *const WpgModel, lambda: f64, out: *mut f64) -> WpgStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let v = m.inner.psd(lambda)?;
        *output(out, 1, "out")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Autocovariances for lags `0..=max_lag` into `out` (length `max_lag + 1`).
/// `tol <= 0` selects the default relative tolerance.
///
/// # Safety
/// `out` must point to `max_lag + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpg_model_acv(model: *const WpgModel, max_lag: usize, tol: f64, out: *mut f64) -> WpgStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let acv = autocovariance(&m.inner, max_lag, if tol > 0.0 { tol } else { ACV_TOL })?;
        output(out, max_lag + 1, "out")?.copy_from_slice(&acv.gamma);
        Ok(())
    })
}

/// Filter from a label such as `db10`, `sym8`, `coif5`, `bl6` or `daubechies:4`.
///
/// # Safety
/// `label` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wpg_filter_new(label: *const c_char, out: *mut *mut WpgFilter) -> WpgStatus {
    guard(|| {
        let inner = parse_filter(c_str(label, "label")?)?;
        set_out(out, WpgFilter { inner })
    })
}

/// # Safety
/// `filter` must come from `wpg_filter_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpg_filter_free(filter: *mut WpgFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Number of low-pass taps, 0 for a null handle.
///
/// # Safety
/// `filter` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_filter_length(filter: *const WpgFilter) -> usize {
    filter.as_ref().map_or(0, |f| f.inner.lowpass.len())
}

/// Singularity-driven basis for the `k` frequencies `nu` at depth `depth`.
///
/// # Safety
/// `nu` must point to `k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wpg_basis_ours(nu: *const f64, k: usize, depth: u32, out: *mut *mut WpgTree) -> WpgStatus {
    guard(|| {
        let inner = best_basis_kfactor(&frequencies(nu, k)?, depth)?;
        set_out(out, WpgTree { inner })
    })
}

/// Filter-gain thresholding basis (`threshold <= 0` selects 0.01).
///
/// # Safety
/// `nu` must point to `k` doubles; handles must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wpg_basis_whitcher(
    nu: *const f64,
    k: usize,
    filter: *const WpgFilter,
    depth: u32,
    threshold: f64,
    out: *mut *mut WpgTree,
) -> WpgStatus {
    guard(|| {
        let f = as_ref(filter, "filter")?;
        let t = if threshold > 0.0 { threshold } else { wpgegen::bestbasis::WHITCHER_THRESHOLD };
        let inner = whitcher_basis(&frequencies(nu, k)?, &f.inner, depth, t)?;
        set_out(out, WpgTree { inner })
    })
}

/// Tree from its JSON form `{"J":..,"leaves":[[j,p],..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_from_json(json: *const c_char, out: *mut *mut WpgTree) -> WpgStatus {
    guard(|| {
        let inner = WpTree::from_json(c_str(json, "json")?)?;
        set_out(out, WpgTree { inner })
    })
}

/// Writes the JSON form into `buf` (NUL-terminated). `needed` receives the
/// required capacity including the terminator; `BufferTooSmall` when `cap`
/// is insufficient.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be null with `cap == 0`).
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_to_json(
    tree: *const WpgTree,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WpgStatus {
    guard(|| {
        let json = as_ref(tree, "tree")?.inner.to_json();
        if !needed.is_null() {
            *needed = json.len() + 1;
        }
        if cap < json.len() + 1 || buf.is_null() {
            return Err(Fail(WpgStatus::BufferTooSmall, format!("need {} bytes", json.len() + 1)));
        }
        ptr::copy_nonoverlapping(json.as_ptr(), buf as *mut u8, json.len());
        *buf.add(json.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_free(tree: *mut WpgTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of leaves, 0 for a null handle.
///
/// # Safety
/// `tree` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_leaf_count(tree: *const WpgTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.leaf_count())
}

/// Series length `2^J`, 0 for a null handle.
///
/// # Safety
/// `tree` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_length(tree: *const WpgTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.len())
}

/// Leaf `index` (in band order) as `(j, p)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_tree_leaf(tree: *const WpgTree, index: usize, j: *mut u32, p: *mut u64) -> WpgStatus {
    guard(|| {
        let t = as_ref(tree, "tree")?;
        let leaf = t.inner.leaves().get(index).ok_or_else(|| {
            Fail(WpgStatus::InvalidArgument, format!("leaf {index} out of range ({} leaves)", t.inner.leaf_count()))
        })?;
        if j.is_null() || p.is_null() {
            return Err(null("j/p"));
        }
        *j = leaf.j;
        *p = leaf.p;
        Ok(())
    })
}

/// Forward transform of `x` (length `n = 2^J`) into `out`, leaves in band
/// order, concatenated.
///
/// # Safety
/// `x` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpg_analyze(
    tree: *const WpgTree,
    filter: *const WpgFilter,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> WpgStatus {
    guard(|| {
        let (t, f) = (as_ref(tree, "tree")?, as_ref(filter, "filter")?);
        let c = analyze(input(x, n, "x")?, &t.inner, &f.inner)?;
        output(out, n, "out")?.copy_from_slice(&c.flatten());
        Ok(())
    })
}

/// Inverse transform of concatenated coefficients `c` (length `n`).
///
/// # Safety
/// `c` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpg_synthesize(
    tree: *const WpgTree,
    filter: *const WpgFilter,
    c: *const f64,
    n: usize,
    out: *mut f64,
) -> WpgStatus {
    guard(|| {
        let (t, f) = (as_ref(tree, "tree")?, as_ref(filter, "filter")?);
        let coeffs = WpCoefficients::from_flat(t.inner.clone(), input(c, n, "c")?)?;
        output(out, n, "out")?.copy_from_slice(&synthesize(&coeffs, &f.inner));
        Ok(())
    })
}

/// Packet-domain simulation; `out` receives `replicates` series of length
/// `2^J` back to back.
///
/// # Safety
/// `out` must point to `replicates * 2^J` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpg_simulate_wp(
    model: *const WpgModel,
    tree: *const WpgTree,
    filter: *const WpgFilter,
    seed: u64,
    replicates: usize,
    out: *mut f64,
) -> WpgStatus {
    guard(|| {
        let (m, t, f) = (as_ref(model, "model")?, as_ref(tree, "tree")?, as_ref(filter, "filter")?);
        let n = t.inner.len();
        let cfg = SimConfig::new(m.inner.clone(), t.inner.clone(), f.inner.clone(), seed, replicates)?;
        let series = simulate_wp(&cfg)?;
        let dst = output(out, n * replicates, "out")?;
        for (chunk, s) in dst.chunks_mut(n).zip(&series) {
            chunk.copy_from_slice(s);
        }
        Ok(())
    })
}

/// Exact Gaussian simulation (Durbin-Levinson); `out` holds
/// `replicates * n` doubles.
///
/// # Safety
/// `out` must point to `replicates * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn wpg_simulate_hosking(
    model: *const WpgModel,
    n: usize,
    seed: u64,
    replicates: usize,
    out: *mut f64,
) -> WpgStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let series = simulate_hosking(&m.inner, n, seed, replicates)?;
        let dst = output(out, n * replicates, "out")?;
        for (chunk, s) in dst.chunks_mut(n.max(1)).zip(&series) {
            chunk.copy_from_slice(s);
        }
        Ok(())
    })
}

/// Penalised diagonalisation score of `tree`: writes `lambda`, the squared
/// HS error and `S = hs_error + lambda * leaves`.
///
/// # Safety
/// Handles and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wpg_score_s(
    model: *const WpgModel,
    tree: *const WpgTree,
    filter: *const WpgFilter,
    lambda: *mut f64,
    hs_error: *mut f64,
    s: *mut f64,
) -> WpgStatus {
    guard(|| {
        let (m, t, f) = (as_ref(model, "model")?, as_ref(tree, "tree")?, as_ref(filter, "filter")?);
        if lambda.is_null() || hs_error.is_null() || s.is_null() {
            return Err(null("score output"));
        }
        let process = ExactProcess::new(&m.inner, t.inner.len(), ACV_TOL)?;
        let r = score_s_exact(&process, &t.inner, &f.inner, "basis")?;
        *lambda = r.lambda;
        *hs_error = r.hs_error;
        *s = r.s;
        Ok(())
    })
}
