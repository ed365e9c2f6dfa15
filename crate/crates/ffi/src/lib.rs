//! C interface to `sampdisc`.
//!
//! Objects cross the boundary as opaque handles created by `sd_*_new`-style
//! constructors and released with the matching `sd_*_free`. Every fallible
//! call returns an [`SdStatus`]; on failure a message is available from
//! [`sd_last_error`] until the next failing call on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sampdisc::certify::{brute_force_certificate, CertMethod, CertStatus, Certificate, Weighting};
use sampdisc::experiment::{run_experiment, ExperimentConfig};
use sampdisc::points::{equispaced, iid_points};
use sampdisc::space::SpaceSpec;
use sampdisc::{
    certify, lpw_recover, make_lacunary_space, make_trig_space, nikolskii_constant, recovery_bound, tensor_product,
    CertifyOptions, Error, PointSet, SampleVector, Spectrum, Subspace, Tolerances, C64,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSpectrum = 3,
    UnsupportedDomain = 4,
    InvalidSample = 5,
    InvalidExponent = 6,
    DegenerateSpace = 7,
    MissingSeed = 8,
    OracleTooLarge = 9,
    HypothesisViolated = 10,
    BudgetExhausted = 11,
    Refused = 12,
    Unbounded = 13,
    ConfigError = 14,
    Unsupported = 15,
    IoError = 16,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdMethod {
    ExactEigen = 0,
    ExactQuadrature = 1,
    OptimizationBound = 2,
    BruteForce = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdCertStatus {
    Certified = 0,
    HeuristicUpperC1 = 1,
    Heuristic = 2,
}

/// Discretization certificate in power form; `p` is `INFINITY` for the sup norm.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SdCertificate {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub method: SdMethod,
    pub status: SdCertStatus,
    pub tolerance: f64,
    pub m: usize,
    pub n: usize,
    /// Sum of the weights, or 0 for equal weights `1/m`.
    pub weight_sum: f64,
}

/// Opaque subspace handle.
pub struct SdSpace(Subspace);

/// Opaque point-set handle.
pub struct SdPoints(PointSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SdStatus {
    match e.root() {
        Error::InvalidSpectrum(_) | Error::InvalidRatio(_) => SdStatus::InvalidSpectrum,
        Error::UnsupportedDomain(_) => SdStatus::UnsupportedDomain,
        Error::InvalidPoint(_) | Error::InvalidSample(_) | Error::InvalidWeight(_) | Error::DimensionMismatch(_) => {
            SdStatus::InvalidSample
        }
        Error::InvalidExponent(_) => SdStatus::InvalidExponent,
        Error::DegenerateSpace(_) => SdStatus::DegenerateSpace,
        Error::MissingSeed => SdStatus::MissingSeed,
        Error::OracleTooLarge(_) => SdStatus::OracleTooLarge,
        Error::LemmaHypothesisViolated(_) => SdStatus::HypothesisViolated,
        Error::BudgetExhausted { .. } | Error::SearchFailed { .. } => SdStatus::BudgetExhausted,
        Error::Refused(_) => SdStatus::Refused,
        Error::Unbounded => SdStatus::Unbounded,
        Error::Config { .. } => SdStatus::ConfigError,
        Error::Unsupported(_) => SdStatus::Unsupported,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => SdStatus::IoError,
        _ => SdStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SdStatus, String)>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SdStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (SdStatus, String)>;
}

impl<T> OrStatus<T> for sampdisc::Result<T> {
    fn or_status(self) -> Result<T, (SdStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SdStatus, String) {
    (SdStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (SdStatus, String) {
    (SdStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_of<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SdStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (SdStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn str_of<'a>(s: *const c_char, what: &str) -> Result<&'a str, (SdStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn sd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn export_space(space: Subspace) -> *mut SdSpace {
    Box::into_raw(Box::new(SdSpace(space)))
}

fn export_points(points: PointSet) -> *mut SdPoints {
    Box::into_raw(Box::new(SdPoints(points)))
}

/// Trigonometric space on `T^dimension` spanned by `e^{i k·x}` for the
/// `count` frequency vectors stored row by row in `freqs` (`count * dimension` entries).
#[no_mangle]
pub unsafe extern "C" fn sd_space_trig(dimension: usize, freqs: *const i64, count: usize, out: *mut *mut SdSpace) -> SdStatus {
    guard(|| {
        if dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let flat = slice_of(freqs, count * dimension, "freqs")?;
        let rows = flat.chunks(dimension).map(|c| c.to_vec()).collect();
        let space = make_trig_space(dimension, Spectrum::new(dimension, rows).or_status()?).or_status()?;
        write_out(out, export_space(space), "out")
    })
}

/// All frequencies with `max_t |k_t| <= degree` on `T^dimension`.
#[no_mangle]
pub unsafe extern "C" fn sd_space_trig_degree(dimension: usize, degree: i64, out: *mut *mut SdSpace) -> SdStatus {
    guard(|| {
        let space = make_trig_space(dimension, Spectrum::cube(dimension, degree).or_status()?).or_status()?;
        write_out(out, export_space(space), "out")
    })
}

/// Lacunary space `T(Λ_n)` with ratio `ratio > 1`.
#[no_mangle]
pub unsafe extern "C" fn sd_space_lacunary(n: usize, ratio: f64, out: *mut *mut SdSpace) -> SdStatus {
    guard(|| write_out(out, export_space(make_lacunary_space(n, ratio).or_status()?), "out"))
}

/// Tensor product of `count >= 2` factor spaces; the factors remain owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn sd_space_tensor(factors: *const *const SdSpace, count: usize, out: *mut *mut SdSpace) -> SdStatus {
    guard(|| {
        let handles = slice_of(factors, count, "factors")?;
        let spaces = handles
            .iter()
            .map(|h| deref(*h, "factor").map(|s| s.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        write_out(out, export_space(tensor_product(&spaces).or_status()?), "out")
    })
}

/// Space from its JSON description.
#[no_mangle]
pub unsafe extern "C" fn sd_space_from_json(json: *const c_char, out: *mut *mut SdSpace) -> SdStatus {
    guard(|| {
        let text = str_of(json, "json")?;
        let spec: SpaceSpec = serde_json::from_str(text).map_err(|e| (SdStatus::ConfigError, e.to_string()))?;
        write_out(out, export_space(spec.build().or_status()?), "out")
    })
}

/// Dimension `N` of the space, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sd_space_dim(space: *const SdSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn sd_space_free(space: *mut SdSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Equispaced grid `2πj/m` in each of `dimension` coordinates (`m^dimension` points).
#[no_mangle]
pub unsafe extern "C" fn sd_points_equispaced(dimension: usize, m: usize, out: *mut *mut SdPoints) -> SdStatus {
    guard(|| {
        if dimension == 0 || m == 0 {
            return Err(invalid("dimension and m must be positive"));
        }
        write_out(out, export_points(equispaced(dimension, m)), "out")
    })
}

/// `m` iid points from the measure of the space's domain, drawn from stream `stream` of `seed`.
#[no_mangle]
pub unsafe extern "C" fn sd_points_iid(space: *const SdSpace, m: usize, seed: u64, stream: u64, out: *mut *mut SdPoints) -> SdStatus {
    guard(|| {
        let domain = deref(space, "space")?.0.domain().clone();
        let points = PointSet::explicit(domain.point_dim(), iid_points(&domain, m, seed, stream)).or_status()?;
        write_out(out, export_points(points), "out")
    })
}

/// Points given row by row (`m * dimension` coordinates).
#[no_mangle]
pub unsafe extern "C" fn sd_points_explicit(dimension: usize, coords: *const f64, m: usize, out: *mut *mut SdPoints) -> SdStatus {
    guard(|| {
        if dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let flat = slice_of(coords, m * dimension, "coords")?;
        let points = PointSet::explicit(dimension, flat.chunks(dimension).map(|c| c.to_vec()).collect()).or_status()?;
        write_out(out, export_points(points), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn sd_points_len(points: *const SdPoints) -> usize {
    points.as_ref().map_or(0, |p| p.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn sd_points_dimension(points: *const SdPoints) -> usize {
    points.as_ref().map_or(0, |p| p.0.dimension())
}

/// Copies the coordinates row by row into `buf`, which must hold `len * dimension` values.
#[no_mangle]
pub unsafe extern "C" fn sd_points_coords(points: *const SdPoints, buf: *mut f64, capacity: usize) -> SdStatus {
    guard(|| {
        let p = &deref(points, "points")?.0;
        let need = p.len() * p.dimension();
        if capacity < need {
            return Err(invalid(format!("buffer holds {capacity} values, {need} needed")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let dst = slice::from_raw_parts_mut(buf, need);
        for (row, x) in dst.chunks_mut(p.dimension()).zip(p.points()) {
            row.copy_from_slice(x);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sd_points_free(points: *mut SdPoints) {
    if !points.is_null() {
        drop(Box::from_raw(points));
    }
}

fn export_certificate(c: &Certificate) -> SdCertificate {
    SdCertificate {
        p: c.p,
        c1: c.c1_pow,
        c2: c.c2_pow,
        method: match c.method {
            CertMethod::ExactEigen => SdMethod::ExactEigen,
            CertMethod::ExactQuadrature => SdMethod::ExactQuadrature,
            CertMethod::OptimizationBound => SdMethod::OptimizationBound,
            CertMethod::BruteForce => SdMethod::BruteForce,
        },
        status: match c.status {
            CertStatus::Certified => SdCertStatus::Certified,
            CertStatus::HeuristicUpperC1 => SdCertStatus::HeuristicUpperC1,
            CertStatus::Heuristic => SdCertStatus::Heuristic,
        },
        tolerance: c.tolerance,
        m: c.m,
        n: c.n,
        weight_sum: match c.weighting {
            Weighting::Uniform => 0.0,
            Weighting::Weighted { weight_sum } => weight_sum,
        },
    }
}

fn import_certificate(c: &SdCertificate) -> Certificate {
    Certificate {
        p: c.p,
        c1_pow: c.c1,
        c2_pow: c.c2,
        method: match c.method {
            SdMethod::ExactEigen => CertMethod::ExactEigen,
            SdMethod::ExactQuadrature => CertMethod::ExactQuadrature,
            SdMethod::OptimizationBound => CertMethod::OptimizationBound,
            SdMethod::BruteForce => CertMethod::BruteForce,
        },
        status: match c.status {
            SdCertStatus::Certified => CertStatus::Certified,
            SdCertStatus::HeuristicUpperC1 => CertStatus::HeuristicUpperC1,
            SdCertStatus::Heuristic => CertStatus::Heuristic,
        },
        tolerance: c.tolerance,
        weighting: if c.weight_sum > 0.0 {
            Weighting::Weighted { weight_sum: c.weight_sum }
        } else {
            Weighting::Uniform
        },
        m: c.m,
        n: c.n,
        enclosure: None,
    }
}

/// Certifies `points` for the `L_p` norm on `space`. `weights` may be null
/// (equal weights `1/m`); otherwise it holds one positive weight per point.
/// `seed` drives the optimizer restarts used for general `p`.
#[no_mangle]
pub unsafe extern "C" fn sd_certify(
    space: *const SdSpace,
    points: *const SdPoints,
    weights: *const f64,
    p: f64,
    seed: u64,
    out: *mut SdCertificate,
) -> SdStatus {
    guard(|| {
        let space = &deref(space, "space")?.0;
        let points = &deref(points, "points")?.0;
        let w = if weights.is_null() {
            None
        } else {
            Some(slice::from_raw_parts(weights, points.len()))
        };
        let cert = certify(space, points, w, p, &CertifyOptions::with_seed(seed)).or_status()?;
        write_out(out, export_certificate(&cert), "out")
    })
}

/// Exhaustive-search certificate for spaces with `N <= 3`.
#[no_mangle]
pub unsafe extern "C" fn sd_brute_force(
    space: *const SdSpace,
    points: *const SdPoints,
    p: f64,
    resolution: usize,
    out: *mut SdCertificate,
) -> SdStatus {
    guard(|| {
        let cert = brute_force_certificate(&deref(space, "space")?.0, &deref(points, "points")?.0, p, resolution).or_status()?;
        write_out(out, export_certificate(&cert), "out")
    })
}

/// Nikol'skii constant `M = sup ‖f‖_∞ / ‖f‖_q` and `B = M N^{-1/q}`.
#[no_mangle]
pub unsafe extern "C" fn sd_nikolskii(space: *const SdSpace, q: f64, out_m: *mut f64, out_b: *mut f64) -> SdStatus {
    guard(|| {
        let est = nikolskii_constant(&deref(space, "space")?.0, q, &Tolerances::default()).or_status()?;
        write_out(out_m, est.m, "out_m")?;
        write_out(out_b, est.b, "out_b")
    })
}

/// Recovery constant `2 C_1^{-1} C_2^{1/p} + 1` for a certified certificate.
#[no_mangle]
pub unsafe extern "C" fn sd_recovery_bound(cert: *const SdCertificate, weights: *const f64, m: usize, p: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        let cert = import_certificate(deref(cert, "cert")?);
        let w: Vec<f64> = if weights.is_null() {
            vec![1.0 / m as f64; m]
        } else {
            slice_of(weights, m, "weights")?.to_vec()
        };
        write_out(out, recovery_bound(&cert, &w, p).or_status()?, "out")
    })
}

/// Weighted least-`p`-th-power recovery. `values` holds `2m` numbers
/// (real and imaginary part per point), `weights` may be null for `1/m`,
/// and `coeffs` receives `2N` numbers in the same layout.
#[no_mangle]
pub unsafe extern "C" fn sd_recover(
    space: *const SdSpace,
    points: *const SdPoints,
    values: *const f64,
    weights: *const f64,
    p: f64,
    coeffs: *mut f64,
    out_residual: *mut f64,
) -> SdStatus {
    guard(|| {
        let space = &deref(space, "space")?.0;
        let points = &deref(points, "points")?.0;
        let m = points.len();
        let raw = slice_of(values, 2 * m, "values")?;
        let vals: Vec<C64> = raw.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let w: Vec<f64> = if weights.is_null() {
            vec![1.0 / m as f64; m]
        } else {
            slice_of(weights, m, "weights")?.to_vec()
        };
        let samples = SampleVector::new(vals, points.clone()).or_status()?;
        let rec = lpw_recover(&samples, space, p, &w, &Tolerances::default()).or_status()?;
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        let dst = slice::from_raw_parts_mut(coeffs, 2 * space.dim());
        for (pair, c) in dst.chunks_mut(2).zip(rec.coefficients.coeffs()) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        if !out_residual.is_null() {
            out_residual.write(rec.discrete_residual);
        }
        Ok(())
    })
}

/// Runs an experiment from its JSON configuration. On success `*out_report`
/// receives the report as JSON, to be released with [`sd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sd_run_experiment(config_json: *const c_char, out_report: *mut *mut c_char) -> SdStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(str_of(config_json, "config_json")?).or_status()?;
        let report = run_experiment(&config).or_status()?;
        let json = serde_json::to_string(&report).map_err(|e| (SdStatus::IoError, e.to_string()))?;
        let c = CString::new(json).map_err(|e| invalid(e.to_string()))?;
        write_out(out_report, c.into_raw(), "out_report")
    })
}

#[no_mangle]
pub unsafe extern "C" fn sd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
