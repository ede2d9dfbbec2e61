//! C ABI for the simplex QMC toolkit.
//!
//! Every fallible function returns an [`SqmcStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be fetched with [`sqmc_last_error_message`]. Objects are opaque handles
//! released by their `_free` function; strings returned to the caller are
//! released with [`sqmc_string_free`].
//!
//! Points are passed as flat `double` arrays: a simplex point is `d`
//! coordinates, a product point is `m·d` coordinates (factor by factor), and
//! a point set is `n` product points back to back.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use simplex_qmc::kernel::{self, ExtremaOptions, KernelConstants, DEFAULT_SERIES_TOLERANCE};
use simplex_qmc::orthopoly::OrthonormalBasis;
use simplex_qmc::wce::{self, ProductPointSet};
use simplex_qmc::{Error, Kernel, KernelParams, ProductPoint, SimplexPoint, TruncationPolicy, WeightSchedule};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqmcStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    OutOfRange = 3,
    /// Smoothness `r <= d + 1`.
    Smoothness = 4,
    Internal = 5,
    Io = 6,
    Parse = 7,
    NullPointer = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

impl From<&Error> for SqmcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => SqmcStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => SqmcStatus::DimensionMismatch,
            Error::OutOfRange { .. } => SqmcStatus::OutOfRange,
            Error::Smoothness { .. } => SqmcStatus::Smoothness,
            Error::Internal(_) => SqmcStatus::Internal,
            Error::Io(_) => SqmcStatus::Io,
            Error::Parse(_) => SqmcStatus::Parse,
        }
    }
}

/// Orthonormal basis of `Π_L` on the simplex.
pub struct SqmcBasis {
    inner: Arc<OrthonormalBasis>,
}

/// Truncated kernel `K_1 = 1 + γ g`.
pub struct SqmcKernel {
    inner: Kernel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (SqmcStatus, String)>>(f: F) -> SqmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic in simplex-qmc".into());
            SqmcStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (SqmcStatus, String)>;

fn lib<T>(r: simplex_qmc::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (SqmcStatus::from(&e), e.to_string()))
}

fn null(name: &str) -> (SqmcStatus, String) {
    (SqmcStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> FfiResult<&'a [f64]> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or a valid, writable pointer.
unsafe fn write<T>(p: *mut T, v: T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `h` must be null or a live handle.
unsafe fn handle<'a, T>(h: *const T, name: &str) -> FfiResult<&'a T> {
    h.as_ref().ok_or_else(|| null(name))
}

fn simplex_point(coords: &[f64]) -> FfiResult<SimplexPoint> {
    lib(SimplexPoint::new(coords.to_vec()))
}

fn schedule(gammas: &[f64]) -> FfiResult<WeightSchedule> {
    lib(WeightSchedule::new(gammas.to_vec()))
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s).map(CString::into_raw).map_err(|e| (SqmcStatus::Internal, e.to_string()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null if it
/// succeeded. Release with [`sqmc_string_free`].
#[no_mangle]
pub extern "C" fn sqmc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(msg) => CString::new(msg.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds (or takes from the process cache) the basis of degree `<= max_degree`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`sqmc_basis_free`].
#[no_mangle]
pub unsafe extern "C" fn sqmc_basis_new(d: usize, max_degree: usize, out: *mut *mut SqmcBasis) -> SqmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lib(OrthonormalBasis::cached(d, max_degree))?;
        write(out, Box::into_raw(Box::new(SqmcBasis { inner })), "out")
    })
}

/// # Safety
/// `basis` must be null or a handle from [`sqmc_basis_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqmc_basis_free(basis: *mut SqmcBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of basis functions, or 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqmc_basis_len(basis: *const SqmcBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.len())
}

/// Evaluates every basis function at `x` (`d` coordinates) into `out`,
/// which must hold `out_len >= sqmc_basis_len(basis)` doubles.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn sqmc_basis_eval(
    basis: *const SqmcBasis,
    x: *const f64,
    d: usize,
    out: *mut f64,
    out_len: usize,
) -> SqmcStatus {
    guard(|| {
        let b = handle(basis, "basis")?;
        let x = simplex_point(slice(x, d, "x")?)?;
        let vals = lib(b.inner.eval_all(&x))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < vals.len() {
            return Err((SqmcStatus::InvalidArgument, format!("out holds {out_len} values, need {}", vals.len())));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), out, vals.len());
        Ok(())
    })
}

/// Creates the kernel for `(d, r, γ)`. `max_degree = 0` picks the default
/// truncation; otherwise the kernel is truncated at that degree.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`sqmc_kernel_free`].
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_new(
    d: usize,
    r: f64,
    gamma: f64,
    max_degree: usize,
    out: *mut *mut SqmcKernel,
) -> SqmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let truncation = if max_degree == 0 {
            lib(TruncationPolicy::default_for(d, r))?
        } else {
            lib(TruncationPolicy::at_degree(d, r, max_degree))?
        };
        let params = lib(KernelParams::with_truncation(d, r, gamma, truncation))?;
        let inner = lib(Kernel::new(params))?;
        write(out, Box::into_raw(Box::new(SqmcKernel { inner })), "out")
    })
}

/// # Safety
/// `kernel` must be null or a handle from [`sqmc_kernel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_free(kernel: *mut SqmcKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Truncation degree `L` and certified tail tolerance of the kernel.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_truncation(
    kernel: *const SqmcKernel,
    max_degree: *mut usize,
    tail_tolerance: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        write(max_degree, k.inner.max_degree(), "max_degree")?;
        write(tail_tolerance, k.inner.tail_tolerance(), "tail_tolerance")
    })
}

/// `g(x, y)` for simplex points of `d` coordinates.
///
/// # Safety
/// `x` and `y` must hold `d` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_g(
    kernel: *const SqmcKernel,
    x: *const f64,
    y: *const f64,
    d: usize,
    out: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let x = simplex_point(slice(x, d, "x")?)?;
        let y = simplex_point(slice(y, d, "y")?)?;
        write(out, lib(k.inner.g_eval(&x, &y))?, "out")
    })
}

/// `K_1(x, y) = 1 + γ g(x, y)`.
///
/// # Safety
/// `x` and `y` must hold `d` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_k1(
    kernel: *const SqmcKernel,
    x: *const f64,
    y: *const f64,
    d: usize,
    out: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let x = simplex_point(slice(x, d, "x")?)?;
        let y = simplex_point(slice(y, d, "y")?)?;
        write(out, lib(k.inner.k1_eval(&x, &y))?, "out")
    })
}

/// `K_m(x, y)` for product points of `m·d` coordinates with weights
/// `gammas[0..m]`.
///
/// # Safety
/// `x` and `y` must hold `m·d` doubles, `gammas` `m` doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_km(
    kernel: *const SqmcKernel,
    x: *const f64,
    y: *const f64,
    m: usize,
    gammas: *const f64,
    out: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let d = k.inner.d();
        let x = lib(ProductPoint::from_flat(slice(x, m * d, "x")?, d, m))?;
        let y = lib(ProductPoint::from_flat(slice(y, m * d, "y")?, d, m))?;
        let s = schedule(slice(gammas, m, "gammas")?)?;
        write(out, lib(k.inner.km_eval(&x, &y, &s))?, "out")
    })
}

/// Squared worst-case error of `n` equal-weight nodes in `[T^d]^m`.
///
/// # Safety
/// `points` must hold `n·m·d` doubles, `gammas` `m` doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_wce_sq(
    kernel: *const SqmcKernel,
    points: *const f64,
    n: usize,
    m: usize,
    gammas: *const f64,
    out: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let d = k.inner.d();
        let width = m * d;
        if n == 0 || width == 0 {
            return Err((SqmcStatus::InvalidArgument, "n and m must be positive".into()));
        }
        let flat = slice(points, n * width, "points")?;
        let pts = flat.chunks(width).map(|c| ProductPoint::from_flat(c, d, m)).collect::<simplex_qmc::Result<Vec<_>>>();
        let set = lib(pts.and_then(ProductPointSet::new))?;
        let s = schedule(slice(gammas, m, "gammas")?)?;
        write(out, lib(wce::enm_sq(&k.inner, &s, &set))?, "out")
    })
}

/// Series constant `c_{d,r}`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_c_dr(d: usize, r: f64, out: *mut f64) -> SqmcStatus {
    guard(|| write(out, lib(kernel::c_dr(d, r, DEFAULT_SERIES_TOLERANCE))?, "out"))
}

/// Series constant `s_{d,r}`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_s_dr(d: usize, r: f64, out: *mut f64) -> SqmcStatus {
    guard(|| write(out, lib(kernel::s_dr(d, r, DEFAULT_SERIES_TOLERANCE))?, "out"))
}

/// All kernel constants for weights bounded by `gamma_star`, as a JSON
/// document. `grid_divisions = 0` uses the default grid. Release the string
/// with [`sqmc_string_free`].
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_kernel_constants_json(
    kernel: *const SqmcKernel,
    gamma_star: f64,
    grid_divisions: usize,
    out: *mut *mut c_char,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = ExtremaOptions::default();
        if grid_divisions > 0 {
            opts.grid_divisions = grid_divisions;
        }
        let report = lib(KernelConstants::compute(&k.inner, gamma_star, &opts, DEFAULT_SERIES_TOLERANCE))?;
        let text = serde_json::to_string(&report).map_err(|e| (SqmcStatus::Internal, e.to_string()))?;
        write(out, into_c_string(text)?, "out")
    })
}

/// Reads a NUL-terminated UTF-8 string.
///
/// # Safety
/// `s` must be null or a valid C string.
unsafe fn read_c_str<'a>(s: *const c_char, name: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s).to_str().map_err(|e| (SqmcStatus::InvalidArgument, format!("{name}: {e}")))
}

/// Squared worst-case error of the point set stored in `path` (`.csv` or
/// JSON), with weights `gammas[0..m]` where `m` must match the file.
///
/// # Safety
/// `path` must be a valid C string, `gammas` must hold `m` doubles and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqmc_wce_sq_file(
    kernel: *const SqmcKernel,
    path: *const c_char,
    m: usize,
    gammas: *const f64,
    out: *mut f64,
) -> SqmcStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let path = read_c_str(path, "path")?;
        let set = lib(simplex_qmc::io::read_point_set(std::path::Path::new(path)))?;
        let s = schedule(slice(gammas, m, "gammas")?)?;
        write(out, lib(wce::enm_sq(&k.inner, &s, &set))?, "out")
    })
}
