//! C ABI for the dppc library.
//!
//! Every function returns a [`DppcStatus`]; on failure the message is kept per
//! thread and read back with [`dppc_last_error`]. Handles are opaque and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dppc::bounds::{
    corollary_conditions, kmeans_covering_number_log, thm2_mu_star, thm3_m_star, BoundInputs, ProcessKind,
};
use dppc::datasets::{load_csv, CsvOptions};
use dppc::dpp::{dpp_marginals, mdpp_marginals, sample_dpp, sample_mdpp, MarginalKernelView, WeightedSample};
use dppc::experiment::build_rff_kernel;
use dppc::rff::gaussian_kernel_matrix;
use dppc::rng::seeded;
use dppc::sensitivity::{bicriteria_sensitivity_bound, one_means_sensitivity};
use dppc::{DppcError, ErrorClass, PointSet};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DppcStatus {
    Ok = 0,
    /// A null pointer, a short buffer or a malformed string was passed.
    InvalidArgument = 1,
    Config = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// A set of points in R^d.
pub struct DppcPointSet(PointSet);

/// A DPP L-ensemble in spectral form.
pub struct DppcKernel(MarginalKernelView);

/// A weighted sample with its inclusion probabilities.
pub struct DppcSample(WeightedSample);

/// Sample-size bounds for proportional inclusion probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DppcMuStar {
    pub mu1: f64,
    pub mu2: f64,
    pub mu_star: f64,
    pub min_sensitivity_condition: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DppcCorollary {
    pub alpha: f64,
    pub beta: f64,
    pub requirement: f64,
    pub implied_bound: f64,
    pub satisfied: bool,
    pub admissible: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

enum Failure {
    Argument(&'static str),
    Library(DppcError),
}

impl From<DppcError> for Failure {
    fn from(e: DppcError) -> Self {
        Failure::Library(e)
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn guard(body: impl FnOnce() -> FfiResult) -> DppcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            DppcStatus::Ok
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            DppcStatus::InvalidArgument
        }
        Ok(Err(Failure::Library(e))) => {
            set_error(&e.to_string());
            match e.class() {
                ErrorClass::Config => DppcStatus::Config,
                ErrorClass::Numerical => DppcStatus::Numerical,
                ErrorClass::Io => DppcStatus::Io,
            }
        }
        Err(_) => {
            set_error("internal panic");
            DppcStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    unsafe { p.as_ref() }.ok_or(Failure::Argument(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Argument(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(Failure::Argument("null output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, capacity: usize) -> FfiResult {
    if capacity < src.len() {
        return Err(Failure::Argument("output buffer too short"));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Argument("null output buffer"));
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dppc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `n * d` row-major coordinates into a new point set.
///
/// # Safety
/// `data` must point to `n * d` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_pointset_new(
    data: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut DppcPointSet,
) -> DppcStatus {
    guard(|| {
        let len = n.checked_mul(d).ok_or(Failure::Argument("n * d overflows"))?;
        let values = unsafe { slice(data, len, "null data")? }.to_vec();
        let points = PointSet::new(values, n, d)?;
        unsafe { write_out(out, boxed(DppcPointSet(points))) }
    })
}

/// Loads a CSV file; `header` skips the first line and `labels` reads the
/// last column as an integer label.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_pointset_load_csv(
    path: *const c_char,
    header: bool,
    labels: bool,
    out: *mut *mut DppcPointSet,
) -> DppcStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Argument("null path"));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Failure::Argument("path is not UTF-8"))?;
        let points = load_csv(Path::new(path), CsvOptions { header, labels })?;
        unsafe { write_out(out, boxed(DppcPointSet(points))) }
    })
}

/// # Safety
/// `points` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dppc_pointset_len(points: *const DppcPointSet) -> usize {
    unsafe { points.as_ref() }.map_or(0, |p| p.0.len())
}

/// # Safety
/// `points` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dppc_pointset_dim(points: *const DppcPointSet) -> usize {
    unsafe { points.as_ref() }.map_or(0, |p| p.0.dim())
}

/// # Safety
/// `points` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dppc_pointset_free(points: *mut DppcPointSet) {
    if !points.is_null() {
        drop(unsafe { Box::from_raw(points) });
    }
}

/// Gaussian L-ensemble approximated with `r` random Fourier frequencies.
///
/// # Safety
/// `points` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_kernel_rff(
    points: *const DppcPointSet,
    s: f64,
    r: usize,
    seed: u64,
    out: *mut *mut DppcKernel,
) -> DppcStatus {
    guard(|| {
        let points = unsafe { borrow(points, "null point set")? };
        let view = build_rff_kernel(&points.0, s, r, &mut seeded(seed))?;
        unsafe { write_out(out, boxed(DppcKernel(view))) }
    })
}

/// Exact Gaussian L-ensemble `exp(-|x - y|^2 / s^2)`.
///
/// # Safety
/// `points` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_kernel_exact(
    points: *const DppcPointSet,
    s: f64,
    out: *mut *mut DppcKernel,
) -> DppcStatus {
    guard(|| {
        let points = unsafe { borrow(points, "null point set")? };
        let l = gaussian_kernel_matrix(&points.0, s)?;
        let view = MarginalKernelView::from_l_ensemble(&l)?;
        unsafe { write_out(out, boxed(DppcKernel(view))) }
    })
}

/// Numerical rank of the kernel, the largest feasible m-DPP size.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dppc_kernel_rank(kernel: *const DppcKernel) -> usize {
    unsafe { kernel.as_ref() }.map_or(0, |k| k.0.rank())
}

/// # Safety
/// `kernel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dppc_kernel_free(kernel: *mut DppcKernel) {
    if !kernel.is_null() {
        drop(unsafe { Box::from_raw(kernel) });
    }
}

/// Inclusion probabilities of every point; `m = 0` selects the DPP, otherwise
/// the m-DPP of size `m`.
///
/// # Safety
/// `kernel` must be a live handle and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dppc_kernel_marginals(
    kernel: *const DppcKernel,
    m: usize,
    out: *mut f64,
    capacity: usize,
) -> DppcStatus {
    guard(|| {
        let kernel = unsafe { borrow(kernel, "null kernel")? };
        let pi = if m == 0 {
            dpp_marginals(&kernel.0)
        } else {
            mdpp_marginals(&kernel.0, m)?
        };
        unsafe { copy_out(&pi, out, capacity) }
    })
}

/// Draws one sample; `m = 0` samples the DPP, otherwise the m-DPP of size `m`.
///
/// # Safety
/// `kernel` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_sample(
    kernel: *const DppcKernel,
    m: usize,
    seed: u64,
    out: *mut *mut DppcSample,
) -> DppcStatus {
    guard(|| {
        let kernel = unsafe { borrow(kernel, "null kernel")? };
        let mut rng = seeded(seed);
        let sample = if m == 0 {
            sample_dpp(&kernel.0, &mut rng)?
        } else {
            sample_mdpp(&kernel.0, m, &mut rng)?
        };
        unsafe { write_out(out, boxed(DppcSample(sample))) }
    })
}

/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dppc_sample_len(sample: *const DppcSample) -> usize {
    unsafe { sample.as_ref() }.map_or(0, |s| s.0.len())
}

/// Copies the sampled indices, weights `1 / pi` and inclusion probabilities.
/// Any of the output buffers may be null to skip it.
///
/// # Safety
/// `sample` must be a live handle; non-null buffers must hold `capacity` items.
#[no_mangle]
pub unsafe extern "C" fn dppc_sample_read(
    sample: *const DppcSample,
    indices: *mut usize,
    weights: *mut f64,
    inclusion: *mut f64,
    capacity: usize,
) -> DppcStatus {
    guard(|| {
        let sample = &unsafe { borrow(sample, "null sample")? }.0;
        if !indices.is_null() {
            unsafe { copy_out(&sample.indices, indices, capacity)? };
        }
        if !weights.is_null() {
            unsafe { copy_out(&sample.weights, weights, capacity)? };
        }
        if !inclusion.is_null() {
            unsafe { copy_out(&sample.inclusion_probs, inclusion, capacity)? };
        }
        Ok(())
    })
}

/// # Safety
/// `sample` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dppc_sample_free(sample: *mut DppcSample) {
    if !sample.is_null() {
        drop(unsafe { Box::from_raw(sample) });
    }
}

/// Sensitivities for k-means: exact for `k = 1`, a bicriteria upper bound otherwise.
/// `total` receives their sum and may be null.
///
/// # Safety
/// `points` must be a live handle and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dppc_sensitivity(
    points: *const DppcPointSet,
    k: usize,
    seed: u64,
    out: *mut f64,
    capacity: usize,
    total: *mut f64,
) -> DppcStatus {
    guard(|| {
        let points = unsafe { borrow(points, "null point set")? };
        let profile = if k == 1 {
            one_means_sensitivity(&points.0)?
        } else {
            bicriteria_sensitivity_bound(&points.0, k, &mut seeded(seed))?.0
        };
        unsafe { copy_out(&profile.sigma, out, capacity)? };
        if !total.is_null() {
            unsafe { total.write(profile.total) };
        }
        Ok(())
    })
}

unsafe fn bound_inputs(
    sigma: *const f64,
    pi: *const f64,
    n: usize,
    epsilon: f64,
    delta: f64,
    log_n: f64,
) -> FfiResult<BoundInputs> {
    let sigma = unsafe { slice(sigma, n, "null sensitivities")? }.to_vec();
    let pi = unsafe { slice(pi, n, "null inclusion probabilities")? }.to_vec();
    Ok(BoundInputs {
        mu: pi.iter().sum(),
        sigma,
        pi,
        epsilon,
        delta,
        log_n,
    })
}

/// Expected sample size needed by a DPP with marginals `pi`, with `mu = sum(pi)`.
///
/// # Safety
/// `sigma` and `pi` must hold `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_bound_mu_star(
    sigma: *const f64,
    pi: *const f64,
    n: usize,
    epsilon: f64,
    delta: f64,
    log_n: f64,
    out: *mut DppcMuStar,
) -> DppcStatus {
    guard(|| {
        let inputs = unsafe { bound_inputs(sigma, pi, n, epsilon, delta, log_n)? };
        let mu = thm2_mu_star(&inputs)?;
        let value = DppcMuStar {
            mu1: mu.mu1,
            mu2: mu.mu2,
            mu_star: mu.mu_star,
            min_sensitivity_condition: mu.lemma_holds,
        };
        unsafe { write_out(out, value) }
    })
}

/// Sample size needed by an m-DPP with marginals `pi`.
///
/// # Safety
/// `sigma` and `pi` must hold `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_bound_m_star(
    sigma: *const f64,
    pi: *const f64,
    n: usize,
    epsilon: f64,
    delta: f64,
    log_n: f64,
    out: *mut f64,
) -> DppcStatus {
    guard(|| {
        let inputs = unsafe { bound_inputs(sigma, pi, n, epsilon, delta, log_n)? };
        let m = thm3_m_star(&inputs)?;
        unsafe { write_out(out, m) }
    })
}

/// Conditions for marginals proportional to sensitivities; `fixed_size`
/// selects the m-DPP form.
///
/// # Safety
/// `sigma` and `pi` must hold `n` doubles and `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn dppc_bound_corollary(
    sigma: *const f64,
    pi: *const f64,
    n: usize,
    epsilon: f64,
    delta: f64,
    log_n: f64,
    total: f64,
    fixed_size: c_int,
    out: *mut DppcCorollary,
) -> DppcStatus {
    guard(|| {
        let sigma = unsafe { slice(sigma, n, "null sensitivities")? };
        let pi = unsafe { slice(pi, n, "null inclusion probabilities")? };
        let kind = if fixed_size != 0 {
            ProcessKind::MDpp
        } else {
            ProcessKind::Dpp
        };
        let c = corollary_conditions(sigma, pi, epsilon, delta, log_n, total, kind)?;
        let value = DppcCorollary {
            alpha: c.alpha,
            beta: c.beta,
            requirement: c.requirement,
            implied_bound: c.implied_bound,
            satisfied: c.satisfied,
            admissible: c.admissible,
        };
        unsafe { write_out(out, value) }
    })
}

/// Log covering number of the k-means parameter space.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dppc_bound_covering_log(
    diameter: f64,
    epsilon: f64,
    mean_optimal_cost: f64,
    k: usize,
    d: usize,
    out: *mut f64,
) -> DppcStatus {
    guard(|| {
        let v = kmeans_covering_number_log(diameter, epsilon, mean_optimal_cost, k, d)?;
        unsafe { write_out(out, v) }
    })
}
