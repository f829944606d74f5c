//! C ABI over `bergman-gaf`: opaque basis and sample handles, status codes, and a
//! thread-local message for the last error.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use bergman_gaf::bergman::{BasisRequest, DegreePolicy, OrthonormalBasis};
use bergman_gaf::config::parse_tool_config_str;
use bergman_gaf::experiments::ExperimentKind;
use bergman_gaf::gaf::{sample_gaf, RngStream};
use bergman_gaf::geometry::{CompactSubset, Domain, Point, Weight};
use bergman_gaf::run::run;
use bergman_gaf::zeros::find_zeros;
use bergman_gaf::Error;
use num_complex::Complex64;

/// Result of every fallible call. On anything but `Ok`, `gaf_last_error` describes it.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GafStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Weights constructible without a config.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GafWeightKind {
    Zero = 0,
    /// c |z|^2
    Quadratic = 1,
    /// max(log |z|, 0)
    MaxLog = 2,
}

/// Orthonormal basis of the weighted Bergman space H(nu), truncated at degree M.
pub struct GafBasis {
    inner: Arc<OrthonormalBasis>,
}

/// One sampled Gaussian analytic function f_n.
pub struct GafSample {
    inner: bergman_gaf::gaf::GafSample,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GafStatus {
    match e {
        Error::OutsideDomain { .. } | Error::InvalidParameter(_) | Error::MismatchedSamples(_) => GafStatus::InvalidArgument,
        Error::NonFiniteNode { .. }
        | Error::NotPositiveSemidefinite { .. }
        | Error::RankDeficient { .. }
        | Error::OrthonormalityResidual { .. }
        | Error::DegenerateSample
        | Error::ContourFailure { .. } => GafStatus::Numerical,
        Error::Config(_) | Error::UnknownKey { .. } => GafStatus::Config,
        Error::Cache(_) | Error::Io(_) | Error::Json(_) => GafStatus::Io,
    }
}

fn fail(status: GafStatus, msg: &str) -> GafStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GafStatus>) -> GafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GafStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(GafStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: bergman_gaf::Result<T>) -> Result<T, GafStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), GafStatus> {
    if p.is_null() {
        Err(fail(GafStatus::NullPointer, &format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, GafStatus> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(GafStatus::InvalidArgument, &format!("{name} is not UTF-8")))
}

unsafe fn point_arg(coords: *const f64, len: usize, dim: usize) -> Result<Point, GafStatus> {
    non_null(coords, "coords")?;
    if len != 2 * dim {
        return Err(fail(GafStatus::InvalidArgument, &format!("coords needs {} values (re, im per coordinate), got {len}", 2 * dim)));
    }
    let c = std::slice::from_raw_parts(coords, len);
    Ok(match dim {
        1 => Point::one(Complex64::new(c[0], c[1])),
        _ => Point::two(Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])),
    })
}

/// Message for the most recent failure on this thread; empty after a success. The
/// pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gaf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gaf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds the basis of H(nu) on the disk of the given radius with monomials up to
/// `degree` and default quadrature.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gaf_basis_new_disk(
    radius: f64,
    weight: GafWeightKind,
    c: f64,
    n: u32,
    degree: u32,
    out: *mut *mut GafBasis,
) -> GafStatus {
    guard(|| {
        non_null(out, "out")?;
        let domain = lib(Domain::disk(radius))?;
        let weight = match weight {
            GafWeightKind::Zero => Weight::Zero,
            GafWeightKind::Quadratic => lib(Weight::quadratic(c))?,
            GafWeightKind::MaxLog => Weight::MaxLog,
        };
        let request = BasisRequest {
            domain,
            weight,
            n,
            policy: DegreePolicy::Fixed { degree: degree as usize },
            orders: None,
            compact: None,
        };
        let built = lib(request.build())?;
        *out = Box::into_raw(Box::new(GafBasis { inner: built.basis }));
        Ok(())
    })
}

/// Builds the basis described by a config text (flat dotted TOML keys, the same
/// format the `gaf` tool reads) for the given n.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gaf_basis_from_config(config: *const c_char, n: u32, out: *mut *mut GafBasis) -> GafStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = str_arg(config, "config")?;
        let rc = lib(parse_tool_config_str(text, ExperimentKind::L1))?;
        let built = lib(rc.config.basis_request(n).build())?;
        *out = Box::into_raw(Box::new(GafBasis { inner: built.basis }));
        Ok(())
    })
}

/// Releases a basis. Null is ignored.
///
/// # Safety
/// `basis` must come from a `gaf_basis_*` constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gaf_basis_free(basis: *mut GafBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Dimension D, maximal degree M, complex dimension N of the domain, and the
/// orthonormality residual max|T*GT - I|.
///
/// # Safety
/// `basis` must be a live handle; each output pointer must be valid or null (skipped).
#[no_mangle]
pub unsafe extern "C" fn gaf_basis_info(
    basis: *const GafBasis,
    dim: *mut usize,
    degree: *mut usize,
    domain_dim: *mut usize,
    residual: *mut f64,
) -> GafStatus {
    guard(|| {
        non_null(basis, "basis")?;
        let b = &(*basis).inner;
        if !dim.is_null() {
            *dim = b.dim();
        }
        if !degree.is_null() {
            *degree = b.degree();
        }
        if !domain_dim.is_null() {
            *domain_dim = b.domain_dim();
        }
        if !residual.is_null() {
            *residual = b.residual();
        }
        Ok(())
    })
}

/// log B_n(z, z) and u_n(z) = (1/2n) log B_n(z, z) at a point given as `len` doubles
/// (re, im per coordinate).
///
/// # Safety
/// `basis` must be live; `coords` must hold `len` doubles; outputs valid or null.
#[no_mangle]
pub unsafe extern "C" fn gaf_kernel_diag(
    basis: *const GafBasis,
    coords: *const f64,
    len: usize,
    log_kernel: *mut f64,
    envelope: *mut f64,
) -> GafStatus {
    guard(|| {
        non_null(basis, "basis")?;
        let b = &(*basis).inner;
        let z = point_arg(coords, len, b.domain_dim())?;
        let mut ev = b.evaluator();
        let lk = ev.log_kernel_diag(&z);
        if !log_kernel.is_null() {
            *log_kernel = lk;
        }
        if !envelope.is_null() {
            *envelope = lk / (2.0 * b.n() as f64);
        }
        Ok(())
    })
}

/// Draws f_n = Σ a_j σ_j with the stream (seed, experiment, n of the basis, trial).
///
/// # Safety
/// `basis` must be live; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gaf_sample_new(
    basis: *const GafBasis,
    seed: u64,
    experiment: u32,
    trial: u64,
    out: *mut *mut GafSample,
) -> GafStatus {
    guard(|| {
        non_null(basis, "basis")?;
        non_null(out, "out")?;
        let b = &(*basis).inner;
        let s = sample_gaf(b, RngStream::new(seed, experiment, b.n(), trial));
        *out = Box::into_raw(Box::new(GafSample { inner: s }));
        Ok(())
    })
}

/// Releases a sample. Null is ignored.
///
/// # Safety
/// `sample` must come from `gaf_sample_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gaf_sample_free(sample: *mut GafSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// f(z) for a point given as `len` doubles.
///
/// # Safety
/// `sample` must be live; `coords` must hold `len` doubles; `re`, `im` valid writes.
#[no_mangle]
pub unsafe extern "C" fn gaf_sample_eval(
    sample: *const GafSample,
    coords: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> GafStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let s = &(*sample).inner;
        let z = point_arg(coords, len, s.basis().domain_dim())?;
        let f = s.eval(&z);
        *re = f.re;
        *im = f.im;
        Ok(())
    })
}

/// Copies the monomial coefficients c = T a as (re, im) pairs into `out` (capacity
/// `cap` doubles) and sets `count` to the number of coefficients. Returns
/// `BufferTooSmall` with `count` set when `cap < 2 * count`.
///
/// # Safety
/// `sample` must be live; `out` must hold `cap` doubles (may be null when cap = 0);
/// `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaf_sample_coefficients(
    sample: *const GafSample,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> GafStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(count, "count")?;
        let c = (*sample).inner.monomial_coefficients();
        *count = c.len();
        if cap < 2 * c.len() {
            return Err(fail(GafStatus::BufferTooSmall, &format!("need {} doubles", 2 * c.len())));
        }
        non_null(out, "out")?;
        let dst = std::slice::from_raw_parts_mut(out, 2 * c.len());
        for (k, z) in c.iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Zeros of a one-variable sample in the closed disk |z| <= rho, as (re, im) pairs.
/// Same buffer protocol as `gaf_sample_coefficients`.
///
/// # Safety
/// As for `gaf_sample_coefficients`.
#[no_mangle]
pub unsafe extern "C" fn gaf_sample_zeros(
    sample: *const GafSample,
    rho: f64,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> GafStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(count, "count")?;
        let s = &(*sample).inner;
        if s.basis().domain_dim() != 1 {
            return Err(fail(GafStatus::InvalidArgument, "zeros are available for one-variable samples only"));
        }
        let domain = s.basis().gram().provenance().domain.clone();
        let region = lib(CompactSubset::closed_disk(&domain, rho))?;
        let set = lib(find_zeros(s, &region))?;
        *count = set.points.len();
        if cap < 2 * set.points.len() {
            return Err(fail(GafStatus::BufferTooSmall, &format!("need {} doubles", 2 * set.points.len())));
        }
        if set.points.is_empty() {
            return Ok(());
        }
        non_null(out, "out")?;
        let dst = std::slice::from_raw_parts_mut(out, 2 * set.points.len());
        for (k, z) in set.points.iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Runs the experiment named by the config text's `experiment` key, writes the report
/// into `output_dir`, and sets `exit_code` to 0 (predicate held) or 2 (failed).
///
/// # Safety
/// `config` and `output_dir` must be NUL-terminated strings; `exit_code` valid.
#[no_mangle]
pub unsafe extern "C" fn gaf_run_experiment(config: *const c_char, output_dir: *const c_char, exit_code: *mut i32) -> GafStatus {
    guard(|| {
        non_null(exit_code, "exit_code")?;
        let text = str_arg(config, "config")?;
        let dir = str_arg(output_dir, "output_dir")?;
        let mut rc = lib(bergman_gaf::config::parse_config_str(text, None))?;
        rc.output_dir = Path::new(dir).to_path_buf();
        let outcome = lib(run(&rc))?;
        *exit_code = outcome.exit_code();
        Ok(())
    })
}
