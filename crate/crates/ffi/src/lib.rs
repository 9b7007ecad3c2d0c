//! C ABI for `qrforms`.
//!
//! Every fallible function returns a [`QrfStatus`]; on failure the message is
//! available from [`qrf_last_error`] on the calling thread. Maps are opaque
//! [`QrfMap`] handles released with [`qrf_map_free`]. Strings returned by the
//! library are released with [`qrf_string_free`].
//!
//! Matrices are dense, row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use qrforms::degree::{local_index_2d, preimage_count};
use qrforms::exterior::{comass_norm, ComassBudget, KCovector, Metric};
use qrforms::forms::GridDomain;
use qrforms::linear::{dilatation, svd_analysis, FiberLinearMap};
use qrforms::qr::{dilatation_field, map_library, DifferentiableMap, Region};
use qrforms::suite::{render_report, run_suite, ReportFormat, SuiteConfig};
use qrforms::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrfFormat {
    Json = 0,
    Csv = 1,
}

/// Opaque handle to a catalogue map.
pub struct QrfMap {
    inner: DifferentiableMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QrfStatus {
    match e {
        Error::DimensionMismatch { .. }
        | Error::GradeMismatch { .. }
        | Error::GradeOverflow { .. }
        | Error::InvalidGrade { .. }
        | Error::CoefficientLength { .. }
        | Error::GridMismatch => QrfStatus::DimensionMismatch,
        Error::NonFinite(_) | Error::AllNodesDegenerate | Error::IndexFailure(_) => QrfStatus::Numerical,
        Error::Parse(_) => QrfStatus::Parse,
        Error::Io(_) => QrfStatus::Io,
        _ => QrfStatus::InvalidArgument,
    }
}

struct Fail(QrfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QrfStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> QrfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QrfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QrfStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn map_ref<'a>(map: *const QrfMap) -> Result<&'a DifferentiableMap, Fail> {
    map.as_ref().map(|m| &m.inner).ok_or_else(|| null("map"))
}

unsafe fn string(p: *const c_char, what: &str) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(QrfStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn expect_len(found: usize, expected: usize) -> Result<(), Fail> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn qrf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qrf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a catalogue map (`identity`, `linear`, `winding2d`, `winding3d`,
/// `radial_stretch`, `mobius2d`) from flat numeric parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string, `params` must point to `len`
/// doubles (or be null when `len` is 0) and `out_map` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_new(
    name: *const c_char,
    params: *const f64,
    len: usize,
    out_map: *mut *mut QrfMap,
) -> QrfStatus {
    guard(|| {
        let slot = out(out_map, "out_map")?;
        *slot = ptr::null_mut();
        let name = string(name, "name")?;
        let inner = map_library(&name, slice(params, len, "params")?)?;
        *slot = Box::into_raw(Box::new(QrfMap { inner }));
        Ok(())
    })
}

/// # Safety
/// `map` must come from [`qrf_map_new`] and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_free(map: *mut QrfMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Source dimension of `map`, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_dim(map: *const QrfMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.src_dim())
}

/// `y = f(x)`, both of length `n`.
///
/// # Safety
/// `x` and `y` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_eval(map: *const QrfMap, x: *const f64, n: usize, y: *mut f64) -> QrfStatus {
    guard(|| {
        let f = map_ref(map)?;
        expect_len(n, f.src_dim())?;
        let v = f.try_eval(slice(x, n, "x")?)?;
        if y.is_null() {
            return Err(null("y"));
        }
        std::slice::from_raw_parts_mut(y, n).copy_from_slice(&v);
        Ok(())
    })
}

/// Jacobian matrix `Df(x)` written row-major into `jac` (`n*n` doubles).
///
/// # Safety
/// `x` must point to `n` doubles and `jac` to `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_jacobian(
    map: *const QrfMap,
    x: *const f64,
    n: usize,
    jac: *mut f64,
) -> QrfStatus {
    guard(|| {
        let f = map_ref(map)?;
        expect_len(n, f.src_dim())?;
        let m = f.jacobian(slice(x, n, "x")?);
        if jac.is_null() {
            return Err(null("jac"));
        }
        let dst = std::slice::from_raw_parts_mut(jac, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// Singular values (descending), signed Jacobian and outer dilatation of an
/// `n×n` row-major matrix with Euclidean metrics.
///
/// # Safety
/// `matrix` must point to `n*n` doubles, `singvals` to `n` doubles; the
/// scalar outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_svd(
    matrix: *const f64,
    n: usize,
    singvals: *mut f64,
    signed_jac: *mut f64,
    k_outer: *mut f64,
) -> QrfStatus {
    guard(|| {
        if n == 0 {
            return Err(Fail(QrfStatus::InvalidArgument, "n must be positive".into()));
        }
        let m = DMatrix::from_row_slice(n, n, slice(matrix, n * n, "matrix")?);
        let s = svd_analysis(&FiberLinearMap::euclidean(m)?);
        if singvals.is_null() {
            return Err(null("singvals"));
        }
        std::slice::from_raw_parts_mut(singvals, n).copy_from_slice(&s.singvals);
        *out(signed_jac, "signed_jac")? = s.signed_jac;
        *out(k_outer, "k_outer")? = dilatation(&s).outer;
        Ok(())
    })
}

/// Comass of a k-covector in the Euclidean metric. `coeffs` holds the
/// `C(n,k)` coefficients in lexicographic multi-index order. `lower` is exact
/// when `certified` is set, otherwise the best lower bound found; `norm` is
/// the Grassmann norm.
///
/// # Safety
/// `coeffs` must point to `len` doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_comass(
    coeffs: *const f64,
    len: usize,
    dim: usize,
    grade: usize,
    seed: u64,
    lower: *mut f64,
    norm: *mut f64,
    certified: *mut bool,
) -> QrfStatus {
    guard(|| {
        let alpha = KCovector::new(dim, grade, slice(coeffs, len, "coeffs")?.to_vec())?;
        let budget = ComassBudget {
            seed,
            ..ComassBudget::default()
        };
        let est = comass_norm(&alpha, &Metric::identity(dim), &budget)?;
        *out(lower, "lower")? = est.lower;
        *out(norm, "norm")? = est.norm;
        *out(certified, "certified")? = est.certified;
        Ok(())
    })
}

/// `K_hat = max |Df|ⁿ / J_f` over the grid `[lo, hi]ⁿ` with `samples` nodes
/// per axis, and the largest relative violation of the dilatation
/// inequalities.
///
/// # Safety
/// `map` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_map_dilatation(
    map: *const QrfMap,
    lo: f64,
    hi: f64,
    samples: usize,
    k_hat: *mut f64,
    max_violation: *mut f64,
) -> QrfStatus {
    guard(|| {
        let f = map_ref(map)?;
        let grid = GridDomain::cube(f.src_dim(), lo, hi, samples)?;
        let d = dilatation_field(f, &grid)?;
        *out(k_hat, "k_hat")? = d.verdict.k_hat.ok_or(Error::AllNodesDegenerate)?;
        *out(max_violation, "max_violation")? = d.inequalities.max_violation;
        Ok(())
    })
}

/// Local index `i(f, x)` of a planar map by the winding number of `f - f(x)`
/// on a circle of `radius` about `x`.
///
/// # Safety
/// `x` must point to 2 doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_local_index(
    map: *const QrfMap,
    x: *const f64,
    radius: f64,
    index: *mut i64,
    residual: *mut f64,
) -> QrfStatus {
    guard(|| {
        let f = map_ref(map)?;
        let li = local_index_2d(f, slice(x, f.src_dim(), "x")?, radius)?;
        *out(index, "index")? = li.index;
        *out(residual, "residual")? = li.residual;
        Ok(())
    })
}

/// Number of preimages of `y` in the disk of `radius` about the origin,
/// seeded from a `scan_samples²` grid over `[-radius, radius]²`.
///
/// # Safety
/// `y` must point to 2 doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_preimage_count(
    map: *const QrfMap,
    y: *const f64,
    radius: f64,
    scan_samples: usize,
    count: *mut usize,
    unstable: *mut bool,
) -> QrfStatus {
    guard(|| {
        let f = map_ref(map)?;
        if f.src_dim() != 2 {
            return Err(Error::Unsupported("preimage counting needs a planar map".into()).into());
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius).into());
        }
        let grid = GridDomain::cube(2, -radius, radius, scan_samples)?;
        let fiber = preimage_count(f, slice(y, 2, "y")?, &Region::disk(radius), &grid)?;
        *out(count, "count")? = fiber.count;
        *out(unstable, "unstable")? = fiber.unstable;
        Ok(())
    })
}

/// Runs the verification suite for a JSON configuration and returns the
/// report in `format`. `report` receives a string owned by the library,
/// released with [`qrf_string_free`]; `all_pass` reports the verdict.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; the outputs must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qrf_run_suite(
    config_json: *const c_char,
    format: QrfFormat,
    report: *mut *mut c_char,
    all_pass: *mut bool,
) -> QrfStatus {
    guard(|| {
        let slot = out(report, "report")?;
        *slot = ptr::null_mut();
        let cfg = SuiteConfig::from_json(&string(config_json, "config_json")?)?;
        let r = run_suite(&cfg)?;
        let fmt = match format {
            QrfFormat::Json => ReportFormat::Json,
            QrfFormat::Csv => ReportFormat::Csv,
        };
        let text = render_report(&r, fmt)?;
        *out(all_pass, "all_pass")? = r.all_pass();
        *slot = CString::new(text)
            .map_err(|_| Fail(QrfStatus::Io, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
