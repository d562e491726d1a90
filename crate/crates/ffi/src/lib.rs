//! C ABI over `hypermix`.
//!
//! Points are passed as contiguous `double` arrays in ambient hyperboloid
//! coordinates, `dim + 1` values per point with the time coordinate last.
//! Every fallible call returns an [`HmStatus`]; on failure the message is
//! available from [`hm_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypermix::gaussian::{self, GaussianParams};
use hypermix::geometry::{self, HyperPoint, PoincarePoint, TangentVec, WeightedSample};
use hypermix::mixture::{self, FitConfig, FitReport, Mode};
use hypermix::{Error, RadialModel, ScaleBox};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmStatus {
    Ok = 0,
    NullPointer = 1,
    Contract = 2,
    Domain = 3,
    OutOfBall = 4,
    OffSheet = 5,
    PrecisionLoss = 6,
    Internal = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmMode {
    Em = 0,
    Gem = 1,
}

/// Options for [`hm_fit`]; start from [`hm_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HmFitOptions {
    pub k: usize,
    pub mode: HmMode,
    pub inner_l: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub threads: usize,
}

/// Radial normalizer for one dimension.
pub struct HmModel {
    inner: RadialModel,
}

/// A finished mixture fit.
pub struct HmFit {
    report: FitReport,
    n: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HmStatus {
    match e {
        Error::Contract(_) => HmStatus::Contract,
        Error::Domain(_) => HmStatus::Domain,
        Error::OutOfBall { .. } => HmStatus::OutOfBall,
        Error::OffSheet(_) => HmStatus::OffSheet,
        Error::PrecisionLoss { .. } => HmStatus::PrecisionLoss,
        Error::Internal(_) => HmStatus::Internal,
        Error::Parse { .. } | Error::Io { .. } | Error::Json(_) => HmStatus::Io,
    }
}

enum Fail {
    Null,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HmStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HmStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument");
            HmStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            HmStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null)
}

unsafe fn point(p: *const f64, dim: usize) -> Result<HyperPoint, Fail> {
    Ok(HyperPoint::new(slice(p, dim + 1)?.to_vec())?)
}

unsafe fn points(p: *const f64, n: usize, dim: usize) -> Result<Vec<HyperPoint>, Fail> {
    slice(p, n * (dim + 1))?
        .chunks(dim + 1)
        .map(|c| HyperPoint::new(c.to_vec()).map_err(Fail::from))
        .collect()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Geodesic distance between two points.
///
/// # Safety
/// `x` and `y` must point to `dim + 1` doubles; `out_d` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hm_distance(x: *const f64, y: *const f64, dim: usize, out_d: *mut f64) -> HmStatus {
    guard(|| {
        *out(out_d)? = geometry::distance(&point(x, dim)?, &point(y, dim)?)?;
        Ok(())
    })
}

/// Exponential map at `mu` of the tangent vector `v` (projected onto `T_mu`).
///
/// # Safety
/// `mu`, `v` and `out_x` must each hold `dim + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_exp_map(mu: *const f64, v: *const f64, dim: usize, out_x: *mut f64) -> HmStatus {
    guard(|| {
        let mu = point(mu, dim)?;
        let v: TangentVec = geometry::project_tangent(&mu, slice(v, dim + 1)?)?;
        let x = geometry::exp_map(&mu, &v)?;
        slice_mut(out_x, dim + 1)?.copy_from_slice(x.coords());
        Ok(())
    })
}

/// Logarithm map `Log_mu(x)` in ambient coordinates.
///
/// # Safety
/// `mu`, `x` and `out_v` must each hold `dim + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_log_map(mu: *const f64, x: *const f64, dim: usize, out_v: *mut f64) -> HmStatus {
    guard(|| {
        let v = geometry::log_map(&point(mu, dim)?, &point(x, dim)?)?;
        slice_mut(out_v, dim + 1)?.copy_from_slice(&v.vec);
        Ok(())
    })
}

/// Hyperboloid point to Poincaré ball coordinates (`dim` values).
///
/// # Safety
/// `x` must hold `dim + 1` doubles and `out_y` `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_to_poincare(x: *const f64, dim: usize, out_y: *mut f64) -> HmStatus {
    guard(|| {
        let y = geometry::to_poincare(&point(x, dim)?);
        slice_mut(out_y, dim)?.copy_from_slice(y.coords());
        Ok(())
    })
}

/// Poincaré ball point to hyperboloid coordinates.
///
/// # Safety
/// `y` must hold `dim` doubles and `out_x` `dim + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_from_poincare(y: *const f64, dim: usize, out_x: *mut f64) -> HmStatus {
    guard(|| {
        let x = geometry::from_poincare(&PoincarePoint::new(slice(y, dim)?.to_vec())?)?;
        slice_mut(out_x, dim + 1)?.copy_from_slice(x.coords());
        Ok(())
    })
}

/// Quadrature-backed normalizer.
///
/// # Safety
/// `out_model` must be writable; free the handle with [`hm_model_free`].
#[no_mangle]
pub unsafe extern "C" fn hm_model_new_quadrature(dim: usize, out_model: *mut *mut HmModel) -> HmStatus {
    guard(|| {
        let slot = out(out_model)?;
        *slot = Box::into_raw(Box::new(HmModel {
            inner: RadialModel::quadrature(dim)?,
        }));
        Ok(())
    })
}

/// Interpolated normalizer on `knots` log-spaced values of `beta` in `[beta_lo, beta_hi]`.
///
/// # Safety
/// `out_model` must be writable; free the handle with [`hm_model_free`].
#[no_mangle]
pub unsafe extern "C" fn hm_model_new_grid(dim: usize, beta_lo: f64, beta_hi: f64, knots: usize, out_model: *mut *mut HmModel) -> HmStatus {
    guard(|| {
        let slot = out(out_model)?;
        *slot = Box::into_raw(Box::new(HmModel {
            inner: RadialModel::grid(dim, beta_lo, beta_hi, knots)?,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from an `hm_model_new_*` call and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hm_model_free(model: *mut HmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `log Z_d(beta)`.
///
/// # Safety
/// `model` must be a live handle; `out_a` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hm_log_normalizer(model: *const HmModel, beta: f64, out_a: *mut f64) -> HmStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Fail::Null)?;
        *out(out_a)? = m.inner.log_normalizer(beta)?;
        Ok(())
    })
}

/// Weighted maximum-likelihood location and inverse scale.
///
/// # Safety
/// `pts` holds `n * (dim + 1)` doubles, `weights` `n`, `out_mu` `dim + 1`; `out_beta` is writable.
#[no_mangle]
pub unsafe extern "C" fn hm_weighted_mle(
    model: *const HmModel,
    pts: *const f64,
    weights: *const f64,
    n: usize,
    dim: usize,
    beta_lo: f64,
    beta_hi: f64,
    out_mu: *mut f64,
    out_beta: *mut f64,
) -> HmStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Fail::Null)?;
        let xs = points(pts, n, dim)?;
        let w = slice(weights, n)?;
        let sample = WeightedSample::new(&xs, w)?;
        let (p, _) = gaussian::weighted_mle(&sample, &m.inner, &ScaleBox::new(beta_lo, beta_hi)?)?;
        slice_mut(out_mu, dim + 1)?.copy_from_slice(p.mu.coords());
        *out(out_beta)? = p.beta;
        Ok(())
    })
}

/// `n` draws from the Riemannian Gaussian `(mu, beta)`, ChaCha20 seeded by `seed`.
///
/// # Safety
/// `mu` holds `dim + 1` doubles and `out_pts` `n * (dim + 1)`.
#[no_mangle]
pub unsafe extern "C" fn hm_sample(mu: *const f64, dim: usize, beta: f64, n: usize, seed: u64, out_pts: *mut f64) -> HmStatus {
    guard(|| {
        let params = GaussianParams::new(point(mu, dim)?, beta)?;
        let xs = gaussian::sample(&params, n, seed)?;
        let dst = slice_mut(out_pts, n * (dim + 1))?;
        for (chunk, x) in dst.chunks_mut(dim + 1).zip(&xs) {
            chunk.copy_from_slice(x.coords());
        }
        Ok(())
    })
}

/// Library defaults for a `k`-component fit.
#[no_mangle]
pub extern "C" fn hm_fit_options_default(k: usize) -> HmFitOptions {
    let c = FitConfig::new(k);
    HmFitOptions {
        k,
        mode: HmMode::Em,
        inner_l: c.inner_l,
        tol: c.outer_tol,
        max_iter: c.max_outer,
        restarts: c.restarts,
        seed: c.seed,
        beta_lo: c.scale_box.lo,
        beta_hi: c.scale_box.hi,
        threads: c.threads,
    }
}

/// Fits a mixture to `n` points.
///
/// # Safety
/// `pts` holds `n * (dim + 1)` doubles; `opts` and `out_fit` are valid.
/// Free the result with [`hm_fit_free`].
#[no_mangle]
pub unsafe extern "C" fn hm_fit(model: *const HmModel, pts: *const f64, n: usize, dim: usize, opts: *const HmFitOptions, out_fit: *mut *mut HmFit) -> HmStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Fail::Null)?;
        let o = opts.as_ref().ok_or(Fail::Null)?;
        let slot = out(out_fit)?;
        let xs = points(pts, n, dim)?;
        let cfg = FitConfig {
            k: o.k,
            mode: match o.mode {
                HmMode::Em => Mode::Em,
                HmMode::Gem => Mode::Gem,
            },
            inner_l: o.inner_l,
            outer_tol: o.tol,
            max_outer: o.max_iter,
            restarts: o.restarts,
            seed: o.seed,
            scale_box: ScaleBox::new(o.beta_lo, o.beta_hi)?,
            threads: o.threads.max(1),
            ..FitConfig::default()
        };
        let report = mixture::fit(&xs, &m.inner, &cfg)?;
        *slot = Box::into_raw(Box::new(HmFit { report, n }));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from [`hm_fit`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_free(fit: *mut HmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_k(fit: *const HmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.report.final_params.k())
}

/// Final observed-data log-likelihood, NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_loglik(fit: *const HmFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.report.loglik())
}

/// 1 if the outer loop met its tolerance, 0 otherwise.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_converged(fit: *const HmFit) -> i32 {
    fit.as_ref().map_or(0, |f| i32::from(f.report.converged))
}

/// Outer iterations run.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_iterations(fit: *const HmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.report.outer_iterations)
}

/// Copies the `k` mixing weights.
///
/// # Safety
/// `out_w` holds `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_weights(fit: *const HmFit, out_w: *mut f64) -> HmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or(Fail::Null)?;
        let p = &f.report.final_params;
        slice_mut(out_w, p.k())?.copy_from_slice(&p.weights);
        Ok(())
    })
}

/// Copies the `k` locations, `dim + 1` doubles each.
///
/// # Safety
/// `out_mu` holds `k * (dim + 1)` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_locations(fit: *const HmFit, out_mu: *mut f64) -> HmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or(Fail::Null)?;
        let p = &f.report.final_params;
        let w = p.dim() + 1;
        let dst = slice_mut(out_mu, p.k() * w)?;
        for (chunk, c) in dst.chunks_mut(w).zip(&p.components) {
            chunk.copy_from_slice(c.mu.coords());
        }
        Ok(())
    })
}

/// Copies the `k` inverse scales.
///
/// # Safety
/// `out_beta` holds `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_betas(fit: *const HmFit, out_beta: *mut f64) -> HmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or(Fail::Null)?;
        let p = &f.report.final_params;
        let b: Vec<f64> = p.components.iter().map(|c| c.beta).collect();
        slice_mut(out_beta, p.k())?.copy_from_slice(&b);
        Ok(())
    })
}

/// Copies the `n x k` responsibilities, row-major.
///
/// # Safety
/// `out_r` holds `n * k` doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_responsibilities(fit: *const HmFit, out_r: *mut f64) -> HmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or(Fail::Null)?;
        let r = &f.report.responsibilities;
        let dst = slice_mut(out_r, r.n() * r.k())?;
        for i in 0..r.n() {
            dst[i * r.k()..(i + 1) * r.k()].copy_from_slice(r.row(i));
        }
        Ok(())
    })
}

/// AIC, BIC and HQIC of the fit.
///
/// # Safety
/// All output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hm_fit_criteria(fit: *const HmFit, aic: *mut f64, bic: *mut f64, hqic: *mut f64) -> HmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or(Fail::Null)?;
        let p = &f.report.final_params;
        let c = mixture::information_criteria(f.report.loglik(), f.n, p.dim(), p.k())?;
        *out(aic)? = c.aic;
        *out(bic)? = c.bic;
        *out(hqic)? = c.hqic;
        Ok(())
    })
}
