//! Hyperboloid-model primitives for curvature −1.
//!
//! Points are stored in ambient coordinates `(x_1, …, x_d, x_{d+1})` with the
//! time-like coordinate last, so the origin is `(0, …, 0, 1)` and the
//! Lorentzian form is `Σ_{j≤d} x_j y_j − x_{d+1} y_{d+1}`.

use crate::error::{Error, Result};

/// Largest supported manifold dimension.
pub const MAX_DIM: usize = 64;

/// Tolerance on `|⟨x,x⟩_L + 1|`, relative to `max(1, x_{d+1}²)`.
///
/// Evaluating the Lorentz self-product of a point far from the origin cancels
/// two numbers of size `x_{d+1}²`, so an absolute bound is not attainable in
/// double precision for large radii.
pub const HYPERBOLOID_TOL: f64 = 1e-10;

const EXP_ZERO_NORM: f64 = 1e-14;
const LOG_SERIES_CUTOFF: f64 = 1e-8;
const BALL_MARGIN: f64 = 1e-12;

/// Lorentzian bilinear form without shape checks. Hot-path helper.
#[inline]
pub(crate) fn linner(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() - 1;
    let mut s = 0.0;
    for j in 0..d {
        s += x[j] * y[j];
    }
    s - x[d] * y[d]
}

/// Geodesic distance from `−⟨x,y⟩_L` with the roundoff clamp.
#[inline]
pub(crate) fn dist_from_alpha(alpha: f64) -> f64 {
    alpha.max(1.0).acosh()
}

/// `Σ_{j≤d} x_j y_j − x_{d+1} y_{d+1}`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "lorentz_inner: length mismatch ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Contract(format!(
            "lorentz_inner: vectors need at least 2 coordinates, got {}",
            x.len()
        )));
    }
    Ok(linner(x, y))
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::Contract(format!(
            "dimension {d} outside supported range 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Contract(format!("{what}: non-finite coordinate")))
    }
}

/// A point on the upper sheet of the hyperboloid in `R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPoint {
    coords: Vec<f64>,
}

impl HyperPoint {
    /// The origin `o = (0, …, 0, 1)`.
    pub fn origin(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[dim] = 1.0;
        HyperPoint { coords }
    }

    /// Validates that `coords` lie on the upper sheet within [`HYPERBOLOID_TOL`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(coords, HYPERBOLOID_TOL)
    }

    /// Accepts points within `tol` of the sheet and snaps them onto it.
    pub fn with_tolerance(coords: Vec<f64>, tol: f64) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Contract(format!(
                "a hyperboloid point needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        check_dim(coords.len() - 1)?;
        check_finite(&coords, "HyperPoint")?;
        let t = coords[coords.len() - 1];
        if t <= 0.0 {
            return Err(Error::OffSheet(format!(
                "last coordinate must be positive (upper sheet), got {t}"
            )));
        }
        let q = linner(&coords, &coords);
        let excess = (q + 1.0).abs();
        if excess > tol * (t * t).max(1.0) {
            return Err(Error::OffSheet(format!(
                "|<x,x>_L + 1| = {excess:.3e} exceeds tolerance {tol:.1e}"
            )));
        }
        Ok(Self::from_spatial_unchecked(&coords[..coords.len() - 1]))
    }

    /// Lifts spatial coordinates `u ∈ R^d` to `(u, √(1+‖u‖²))`.
    pub fn from_spatial(u: &[f64]) -> Result<Self> {
        check_dim(u.len())?;
        check_finite(u, "HyperPoint::from_spatial")?;
        Ok(Self::from_spatial_unchecked(u))
    }

    pub(crate) fn from_spatial_unchecked(u: &[f64]) -> Self {
        let s: f64 = u.iter().map(|v| v * v).sum();
        let mut coords = Vec::with_capacity(u.len() + 1);
        coords.extend_from_slice(u);
        coords.push((1.0 + s).sqrt());
        HyperPoint { coords }
    }

    /// Projects a future-timelike ambient vector onto the sheet along its ray.
    pub(crate) fn from_timelike(v: &[f64]) -> Result<Self> {
        check_finite(v, "timelike normalization")?;
        let q = -linner(v, v);
        let t = v[v.len() - 1];
        if !(q > 0.0) || t <= 0.0 {
            return Err(Error::Internal(format!(
                "vector is not future timelike (-<v,v>_L = {q:e}, last = {t:e})"
            )));
        }
        let s = 1.0 / q.sqrt();
        let u: Vec<f64> = v[..v.len() - 1].iter().map(|c| c * s).collect();
        Ok(Self::from_spatial_unchecked(&u))
    }

    /// Manifold dimension `d`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first `d` coordinates.
    pub fn spatial(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    /// The time-like coordinate `x_{d+1} = cosh d(o, x)`.
    pub fn time(&self) -> f64 {
        self.coords[self.dim()]
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A tangent vector `v ∈ T_μ H^d`, i.e. `⟨μ, v⟩_L = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub base: HyperPoint,
    pub vec: Vec<f64>,
}

impl TangentVec {
    pub fn zero(base: &HyperPoint) -> Self {
        TangentVec {
            base: base.clone(),
            vec: vec![0.0; base.coords.len()],
        }
    }

    /// Riemannian norm `√⟨v,v⟩_L`, with tiny negative roundoff clamped to zero.
    pub fn norm(&self) -> f64 {
        linner(&self.vec, &self.vec).max(0.0).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVec {
            base: self.base.clone(),
            vec: self.vec.iter().map(|c| c * s).collect(),
        }
    }
}

/// A point of the open Poincaré ball `B^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePoint {
    coords: Vec<f64>,
}

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        check_finite(&coords, "PoincarePoint")?;
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm >= 1.0 - BALL_MARGIN {
            return Err(Error::OutOfBall { norm });
        }
        Ok(PoincarePoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Borrowed weighted sample `{(x_i, w_i)}` with positive total weight.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample<'a> {
    points: &'a [HyperPoint],
    weights: &'a [f64],
    total: f64,
}

impl<'a> WeightedSample<'a> {
    pub fn new(points: &'a [HyperPoint], weights: &'a [f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("weighted sample is empty".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Contract(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::Contract("points of mixed dimension".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Contract("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Contract("total weight must be positive".into()));
        }
        Ok(WeightedSample {
            points,
            weights,
            total,
        })
    }

    pub fn points(&self) -> &'a [HyperPoint] {
        self.points
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    /// `W = Σ w_i`.
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (&'a HyperPoint, f64)> + 'a {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

fn same_dim(a: &HyperPoint, b: &HyperPoint, op: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "{op}: dimension mismatch ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Geodesic distance `arcosh(max(1, −⟨x,y⟩_L))`.
///
/// For nearby points the same value is computed as `2 arsinh(‖x − y‖_L / 2)`,
/// which keeps full relative precision where `arcosh(1 + ε)` cannot.
pub fn distance(x: &HyperPoint, y: &HyperPoint) -> Result<f64> {
    same_dim(x, y, "distance")?;
    Ok(dist_coords(&x.coords, &y.coords))
}

pub(crate) fn dist_coords(x: &[f64], y: &[f64]) -> f64 {
    let alpha = -linner(x, y);
    if alpha > 2.0 {
        return alpha.acosh();
    }
    let d = x.len() - 1;
    let mut q = 0.0;
    for j in 0..d {
        let e = x[j] - y[j];
        q += e * e;
    }
    let e = x[d] - y[d];
    q -= e * e;
    2.0 * (0.5 * q.max(0.0).sqrt()).asinh()
}

/// `u + ⟨μ,u⟩_L μ`.
pub fn project_tangent(mu: &HyperPoint, u: &[f64]) -> Result<TangentVec> {
    if u.len() != mu.coords.len() {
        return Err(Error::Contract(format!(
            "project_tangent: vector length {} but base has {} coordinates",
            u.len(),
            mu.coords.len()
        )));
    }
    let c = linner(&mu.coords, u);
    let vec = u.iter().zip(&mu.coords).map(|(a, m)| a + c * m).collect();
    Ok(TangentVec {
        base: mu.clone(),
        vec,
    })
}

/// Exponential map at `μ`; the result is snapped back onto the sheet.
pub fn exp_map(mu: &HyperPoint, v: &TangentVec) -> Result<HyperPoint> {
    if v.vec.len() != mu.coords.len() {
        return Err(Error::Contract(format!(
            "exp_map: tangent length {} but base has {} coordinates",
            v.vec.len(),
            mu.coords.len()
        )));
    }
    check_finite(&v.vec, "exp_map")?;
    Ok(exp_raw(&mu.coords, &v.vec))
}

pub(crate) fn exp_raw(mu: &[f64], v: &[f64]) -> HyperPoint {
    let n = linner(v, v).max(0.0).sqrt();
    let d = mu.len() - 1;
    if n <= EXP_ZERO_NORM {
        return HyperPoint::from_spatial_unchecked(&mu[..d]);
    }
    let (ch, sh) = (n.cosh(), n.sinh() / n);
    let u: Vec<f64> = (0..d).map(|j| ch * mu[j] + sh * v[j]).collect();
    HyperPoint::from_spatial_unchecked(&u)
}

/// Logarithm map `Log_μ(x)`.
pub fn log_map(mu: &HyperPoint, x: &HyperPoint) -> Result<TangentVec> {
    same_dim(mu, x, "log_map")?;
    let mut vec = vec![0.0; mu.coords.len()];
    log_into(&mu.coords, &x.coords, 1.0, &mut vec);
    Ok(TangentVec {
        base: mu.clone(),
        vec,
    })
}

/// Coefficient `arcosh(α)/√(α²−1)` of the log map, with the limit 1 near α = 1.
#[inline]
pub(crate) fn log_coefficient(alpha: f64) -> f64 {
    if alpha < 1.0 + LOG_SERIES_CUTOFF {
        1.0
    } else {
        alpha.acosh() / (alpha * alpha - 1.0).sqrt()
    }
}

/// Accumulates `scale · Log_μ(x)` into `out`.
#[inline]
pub(crate) fn log_into(mu: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
    let alpha = (-linner(mu, x)).max(1.0);
    let c = scale * log_coefficient(alpha);
    for j in 0..mu.len() {
        out[j] += c * (x[j] - alpha * mu[j]);
    }
}

/// Point at parameter `t` on the geodesic from `a` (t = 0) to `b` (t = 1).
pub fn geodesic_point(a: &HyperPoint, b: &HyperPoint, t: f64) -> Result<HyperPoint> {
    let v = log_map(a, b)?;
    exp_map(a, &v.scaled(t))
}

/// Stereographic projection `(u, t) ↦ u/(1+t)`.
pub fn to_poincare(x: &HyperPoint) -> PoincarePoint {
    let t = x.time();
    PoincarePoint {
        coords: x.spatial().iter().map(|u| u / (1.0 + t)).collect(),
    }
}

/// Inverse stereographic projection.
pub fn from_poincare(y: &PoincarePoint) -> Result<HyperPoint> {
    let s: f64 = y.coords.iter().map(|c| c * c).sum();
    if s.sqrt() >= 1.0 - BALL_MARGIN {
        return Err(Error::OutOfBall { norm: s.sqrt() });
    }
    let f = 2.0 / (1.0 - s);
    let u: Vec<f64> = y.coords.iter().map(|c| f * c).collect();
    Ok(HyperPoint::from_spatial_unchecked(&u))
}

/// Poincaré-ball distance `2 artanh ‖(−a) ⊕ b‖`.
pub fn poincare_distance(a: &PoincarePoint, b: &PoincarePoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Contract("poincare_distance: dimension mismatch".into()));
    }
    let aa: f64 = a.coords.iter().map(|c| c * c).sum();
    let bb: f64 = b.coords.iter().map(|c| c * c).sum();
    let ab: f64 = a.coords.iter().zip(&b.coords).map(|(x, y)| x * y).sum();
    // Möbius addition (−a) ⊕ b.
    let num_a = 1.0 - 2.0 * ab + bb;
    let num_b = 1.0 - aa;
    let den = 1.0 - 2.0 * ab + aa * bb;
    let diff2: f64 = a
        .coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| {
            let m = (-num_a * x + num_b * y) / den;
            m * m
        })
        .sum();
    Ok(2.0 * diff2.sqrt().atanh())
}

/// Weighted Fréchet functional `Σ w_i d²(x_i, μ)`.
pub fn frechet_value(sample: &WeightedSample<'_>, mu: &HyperPoint) -> Result<f64> {
    check_sample_dim(sample, mu, "frechet_value")?;
    Ok(frechet_value_raw(sample, mu.coords()))
}

pub(crate) fn frechet_value_raw(sample: &WeightedSample<'_>, mu: &[f64]) -> f64 {
    sample
        .iter()
        .map(|(x, w)| {
            let r = dist_from_alpha(-linner(x.coords(), mu));
            w * r * r
        })
        .sum()
}

fn check_sample_dim(sample: &WeightedSample<'_>, mu: &HyperPoint, op: &str) -> Result<()> {
    if sample.dim() != mu.dim() {
        return Err(Error::Contract(format!(
            "{op}: sample dimension {} but point dimension {}",
            sample.dim(),
            mu.dim()
        )));
    }
    Ok(())
}

/// `Σ w_i Log_μ(x_i)` in ambient coordinates.
pub(crate) fn weighted_log_sum(sample: &WeightedSample<'_>, mu: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; mu.len()];
    for (x, w) in sample.iter() {
        if w > 0.0 {
            log_into(mu, x.coords(), w, &mut acc);
        }
    }
    acc
}

/// Riemannian gradient `−2 Σ w_i Log_μ(x_i)`.
pub fn frechet_gradient(sample: &WeightedSample<'_>, mu: &HyperPoint) -> Result<TangentVec> {
    check_sample_dim(sample, mu, "frechet_gradient")?;
    let vec = weighted_log_sum(sample, mu.coords())
        .into_iter()
        .map(|c| -2.0 * c)
        .collect();
    Ok(TangentVec {
        base: mu.clone(),
        vec,
    })
}

/// Weighted score residual `‖Σ w_i Log_μ(x_i)‖_L`.
pub fn score_residual(sample: &WeightedSample<'_>, mu: &HyperPoint) -> Result<f64> {
    check_sample_dim(sample, mu, "score_residual")?;
    let s = weighted_log_sum(sample, mu.coords());
    Ok(linner(&s, &s).max(0.0).sqrt())
}

/// Radius of the origin-centred ball containing every sample point, `max_i d(o, x_i)`.
pub fn hull_radius(sample: &WeightedSample<'_>) -> f64 {
    points_radius(sample.points())
}

pub(crate) fn points_radius(points: &[HyperPoint]) -> f64 {
    points
        .iter()
        .map(|p| p.time().max(1.0).acosh())
        .fold(0.0, f64::max)
}
