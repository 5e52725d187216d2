//! C ABI over `klein_fuchs`.
//!
//! Every entry point returns a [`KfStatus`]; on failure the message is kept per thread and
//! read back with [`kf_last_error`]. Objects cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Strings returned by the library are
//! released with [`kf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use klein_fuchs::fuchsian::EquationA;
use klein_fuchs::klein::{self, KleinData};
use klein_fuchs::metrics::{self, AngleData};
use klein_fuchs::monodromy::{self, MonodromyOptions};
use klein_fuchs::solver::{self, SolveOptions, SolveReport};
use klein_fuchs::{Complex64, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    MalformedJson = 3,
    InvalidInput = 4,
    Numerical = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KfComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for KfComplex {
    fn from(z: Complex64) -> Self {
        KfComplex { re: z.re, im: z.im }
    }
}

/// Angle conditions for a list of angles.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct KfAngleReport {
    pub coaxial_ok: bool,
    pub cond: bool,
    pub cond_value: f64,
    pub sigma: i64,
    pub bound: u64,
}

/// A Fuchsian equation, possibly without accessory parameters.
pub struct KfEquation {
    inner: EquationA,
}

/// Accessory solutions for one equation.
pub struct KfSolveReport {
    equation: EquationA,
    inner: SolveReport,
}

/// Klein operator data for one complete equation.
pub struct KfKlein {
    inner: KleinData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(KfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_validation() { KfStatus::InvalidInput } else { KfStatus::Numerical };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: KfStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a live handle of the right type.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(KfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(KfStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: non-null and NUL-terminated by contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|e| Failure(KfStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(KfStatus::MalformedJson, format!("{what}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(KfStatus::NullPointer, "output pointer is null");
    }
    // SAFETY: non-null and writable by contract.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let s = CString::new(text).map_err(|e| Failure(KfStatus::Numerical, e.to_string()))?;
    unsafe { write_out(out, s.into_raw()) }
}

// Copies `src` into a caller buffer of `cap` elements, always reporting the full length.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), Failure> {
    unsafe { write_out(len, src.len())? };
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return fail(KfStatus::NullPointer, "buffer is null");
    }
    if cap < src.len() {
        return fail(KfStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len()));
    }
    // SAFETY: `buf` has room for `cap >= src.len()` elements.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn kf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn kf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses an equation from its JSON form.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_equation_from_json(json: *const c_char, out: *mut *mut KfEquation) -> KfStatus {
    guard(|| {
        let inner: EquationA = parse(unsafe { read_str(json, "json")? }, "equation")?;
        unsafe { write_out(out, boxed(KfEquation { inner })) }
    })
}

/// Skeleton equation from angles and positions (`{"angles": [...], "positions": [...]}`),
/// with the first three points sent to `0, 1, infinity`.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_equation_from_angles_json(json: *const c_char, out: *mut *mut KfEquation) -> KfStatus {
    guard(|| {
        let data: AngleData = parse(unsafe { read_str(json, "json")? }, "angle data")?;
        let inner = metrics::normalize_positions(&data)?;
        unsafe { write_out(out, boxed(KfEquation { inner })) }
    })
}

/// # Safety
/// `eq` is a live handle; `out` is writable. Free the string with [`kf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn kf_equation_to_json(eq: *const KfEquation, out: *mut *mut c_char) -> KfStatus {
    guard(|| {
        let eq = unsafe { deref(eq, "equation")? };
        let text = serde_json::to_string(&eq.inner).map_err(|e| Failure(KfStatus::Numerical, e.to_string()))?;
        unsafe { write_string(out, text) }
    })
}

/// Number of apparent points `k`.
///
/// # Safety
/// `eq` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_equation_apparent_count(eq: *const KfEquation, out: *mut usize) -> KfStatus {
    guard(|| unsafe { write_out(out, deref(eq, "equation")?.inner.k()) })
}

/// Copies the accessory coefficients into `buf` (capacity `cap`); `len` receives the count,
/// zero for a skeleton.
///
/// # Safety
/// `eq` is a live handle; `buf` holds `cap` elements; `len` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_equation_accessory(
    eq: *const KfEquation,
    buf: *mut KfComplex,
    cap: usize,
    len: *mut usize,
) -> KfStatus {
    guard(|| {
        let eq = unsafe { deref(eq, "equation")? };
        let acc: Vec<KfComplex> = eq.inner.accessory.iter().map(|&z| z.into()).collect();
        unsafe { copy_out(&acc, buf, cap, len) }
    })
}

/// # Safety
/// `eq` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_equation_free(eq: *mut KfEquation) {
    if !eq.is_null() {
        drop(unsafe { Box::from_raw(eq) });
    }
}

/// Finds every accessory vector that makes the integer-exponent points apparent.
///
/// # Safety
/// `eq` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_solve(eq: *const KfEquation, seed: u64, out: *mut *mut KfSolveReport) -> KfStatus {
    guard(|| {
        let eq = unsafe { deref(eq, "equation")? };
        let inner = solver::solve_equation(&eq.inner, seed, &SolveOptions::default())?;
        let report = KfSolveReport {
            equation: eq.inner.clone(),
            inner,
        };
        unsafe { write_out(out, boxed(report)) }
    })
}

/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_solve_count(report: *const KfSolveReport, out: *mut usize) -> KfStatus {
    guard(|| unsafe { write_out(out, deref(report, "report")?.inner.solutions.len()) })
}

/// Bezout bound of the polynomial system.
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_solve_bezout(report: *const KfSolveReport, out: *mut usize) -> KfStatus {
    guard(|| unsafe { write_out(out, deref(report, "report")?.inner.bezout) })
}

/// Largest relative apparency residual of solution `index`.
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_solve_residual(report: *const KfSolveReport, index: usize, out: *mut f64) -> KfStatus {
    guard(|| {
        let r = unsafe { deref(report, "report")? };
        let s = r
            .inner
            .solutions
            .get(index)
            .ok_or_else(|| Failure(KfStatus::OutOfRange, format!("solution {index} of {}", r.inner.solutions.len())))?;
        unsafe { write_out(out, s.max_residual) }
    })
}

/// Complete equation for solution `index`, as a new handle.
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_solve_equation(
    report: *const KfSolveReport,
    index: usize,
    out: *mut *mut KfEquation,
) -> KfStatus {
    guard(|| {
        let r = unsafe { deref(report, "report")? };
        let s = r
            .inner
            .solutions
            .get(index)
            .ok_or_else(|| Failure(KfStatus::OutOfRange, format!("solution {index} of {}", r.inner.solutions.len())))?;
        let acc = s
            .accessory
            .clone()
            .ok_or_else(|| Failure(KfStatus::Numerical, "solution has no accessory vector".into()))?;
        let inner = r.equation.with_accessory(acc)?;
        unsafe { write_out(out, boxed(KfEquation { inner })) }
    })
}

/// Full report as JSON.
///
/// # Safety
/// `report` is a live handle; `out` is writable. Free the string with [`kf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn kf_solve_to_json(report: *const KfSolveReport, out: *mut *mut c_char) -> KfStatus {
    guard(|| {
        let r = unsafe { deref(report, "report")? };
        let text = serde_json::to_string(&r.inner).map_err(|e| Failure(KfStatus::Numerical, e.to_string()))?;
        unsafe { write_string(out, text) }
    })
}

/// # Safety
/// `report` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_solve_free(report: *mut KfSolveReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Klein operator of a complete equation.
///
/// # Safety
/// `eq` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_klein(eq: *const KfEquation, out: *mut *mut KfKlein) -> KfStatus {
    guard(|| {
        let eq = unsafe { deref(eq, "equation")? };
        if eq.inner.is_skeleton() {
            return fail(KfStatus::InvalidInput, "the equation has no accessory parameters");
        }
        let inner = klein::klein(&eq.inner)?;
        unsafe { write_out(out, boxed(KfKlein { inner })) }
    })
}

/// Coefficients of `Q`, lowest degree first.
///
/// # Safety
/// `k` is a live handle; `buf` holds `cap` elements; `len` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_klein_q(k: *const KfKlein, buf: *mut KfComplex, cap: usize, len: *mut usize) -> KfStatus {
    guard(|| {
        let k = unsafe { deref(k, "klein")? };
        let q: Vec<KfComplex> = k.inner.q.coeffs().iter().map(|&z| z.into()).collect();
        unsafe { copy_out(&q, buf, cap, len) }
    })
}

/// Relative residuals of the two series solutions truncated at `order` (0 for the default).
///
/// # Safety
/// `k` is a live handle; `r1` and `r2` are writable.
#[no_mangle]
pub unsafe extern "C" fn kf_klein_residuals(k: *const KfKlein, order: usize, r1: *mut f64, r2: *mut f64) -> KfStatus {
    guard(|| {
        let k = unsafe { deref(k, "klein")? };
        let eq = &k.inner.source;
        let order = if order == 0 { klein::default_order(eq.d()) } else { order };
        let [f1, f2] = k.inner.solutions(order)?;
        unsafe {
            write_out(r1, klein::equation_residual(eq, &f1)?)?;
            write_out(r2, klein::equation_residual(eq, &f2)?)
        }
    })
}

/// Largest projective distance between the conjugated source monodromy and the
/// hypergeometric monodromy over all loops.
///
/// # Safety
/// `k` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_klein_monodromy_distance(k: *const KfKlein, out: *mut f64) -> KfStatus {
    guard(|| {
        let k = unsafe { deref(k, "klein")? };
        let cmp = monodromy::compare_with_hypergeometric(&k.inner, &MonodromyOptions::comparison())?;
        let worst = cmp.loops.iter().map(|l| l.projective_distance).fold(0.0, f64::max);
        unsafe { write_out(out, worst) }
    })
}

/// # Safety
/// `k` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_klein_free(k: *mut KfKlein) {
    if !k.is_null() {
        drop(unsafe { Box::from_raw(k) });
    }
}

/// Angle conditions: three non-integer angles followed by integers at least 2.
///
/// # Safety
/// `angles` holds `n` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_check_angles(angles: *const f64, n: usize, out: *mut KfAngleReport) -> KfStatus {
    guard(|| {
        if angles.is_null() {
            return fail(KfStatus::NullPointer, "angles is null");
        }
        // SAFETY: `angles` holds `n` values by contract.
        let a = unsafe { std::slice::from_raw_parts(angles, n) };
        let r = metrics::check_angle_values(a)?;
        let report = KfAngleReport {
            coaxial_ok: r.coaxial_ok,
            cond: r.cond,
            cond_value: r.cond_value,
            sigma: r.sigma,
            bound: r.bound,
        };
        unsafe { write_out(out, report) }
    })
}

/// Number of verified metrics for angles and positions given as JSON.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_count_metrics(json: *const c_char, seed: u64, out: *mut usize) -> KfStatus {
    guard(|| {
        let data: AngleData = parse(unsafe { read_str(json, "json")? }, "angle data")?;
        let opts = metrics::CountOptions {
            seed,
            ..Default::default()
        };
        let report = metrics::count_metrics(&data, &opts)?;
        unsafe { write_out(out, report.verified_count) }
    })
}

/// Semistandard fillings of the two-row rectangle with content `angles[j] - 1`.
///
/// # Safety
/// `angles` holds `n` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_tableaux_count(angles: *const u32, n: usize, out: *mut u64) -> KfStatus {
    guard(|| {
        if angles.is_null() {
            return fail(KfStatus::NullPointer, "angles is null");
        }
        let a = unsafe { std::slice::from_raw_parts(angles, n) };
        unsafe { write_out(out, metrics::tableaux_count(a)?) }
    })
}
