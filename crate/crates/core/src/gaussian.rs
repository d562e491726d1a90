//! Single isotropic Riemannian Gaussian: density, sampling, weighted
//! barycenter by majorization–minimization, and the scale solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, linner, log_coefficient, HyperPoint, WeightedSample};
use crate::normalizer::{log_integrand, radial_mode, RadialModel};

/// Default score tolerance for [`weighted_barycenter`], relative to total weight.
pub const MM_TOL: f64 = 1e-10;
/// Default MM step cap.
pub const MM_MAX_STEPS: usize = 200;
/// Newton stops once `|Δβ|` falls below this.
pub const SCALE_TOL: f64 = 1e-12;
pub const SCALE_MAX_ITER: usize = 100;
/// Draw attempts per radius before the sampler gives up.
const MAX_REJECTIONS: usize = 10_000;

/// Admissible interval `[lo, hi]` for the inverse scale `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ScaleBox {
    fn default() -> Self {
        ScaleBox { lo: 1e-3, hi: 50.0 }
    }
}

impl ScaleBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::Domain(format!(
                "scale box must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ScaleBox { lo, hi })
    }

    pub fn clamp(&self, beta: f64) -> f64 {
        beta.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta >= self.lo && beta <= self.hi
    }
}

/// One component: location `μ` and inverse scale `β` (so `σ² = 1/(2β)`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mu: HyperPoint,
    pub beta: f64,
}

impl GaussianParams {
    pub fn new(mu: HyperPoint, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be finite and positive, got {beta}")));
        }
        Ok(GaussianParams { mu, beta })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// State of the barycenter iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MMState {
    pub iterate: HyperPoint,
    /// `Σ w_i d²(x_i, μ)` at `iterate`.
    pub objective: f64,
    pub step_count: usize,
    /// `‖Σ w_i Log_μ(x_i)‖_L / W` at `iterate`.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSolveResult {
    pub beta: f64,
    pub iterations: usize,
    pub at_boundary: bool,
}

/// Diagnostics from [`weighted_mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleDiagnostics {
    /// Normalized score residual `‖Σ w_i Log_μ̂(x_i)‖_L / W`.
    pub score_residual: f64,
    /// Weighted dispersion `S_w(μ̂)`.
    pub dispersion: f64,
    pub mm_steps: usize,
    pub mm_converged: bool,
    pub scale: ScaleSolveResult,
}

fn check_model(model: &RadialModel, dim: usize) -> Result<()> {
    if model.dim() != dim {
        return Err(Error::Contract(format!(
            "radial model has dimension {} but points have dimension {dim}",
            model.dim()
        )));
    }
    Ok(())
}

/// `−A_d(β) − β d²(x, μ)`.
pub fn log_density(params: &GaussianParams, model: &RadialModel, x: &HyperPoint) -> Result<f64> {
    check_model(model, params.dim())?;
    let r = geometry::distance(&params.mu, x)?;
    Ok(-model.log_normalizer(params.beta)? - params.beta * r * r)
}

/// Draws a geodesic radius from the density `∝ e^{−βr²} sinh^{d−1}(r)` on `[0, ∞)`.
///
/// The log-density `g` is concave with `g'' ≤ −2β`, so
/// `g(r) ≤ g(r*) − β(r − r*)²` at its mode `r*`; a normal proposal centred at
/// `r*` with variance `1/(2β)`, truncated to `r ≥ 0`, is an exact envelope.
pub fn sample_radius<R: Rng + ?Sized>(d: usize, beta: f64, rng: &mut R) -> Result<f64> {
    let mode = radial_mode(d, beta);
    let gmax = log_integrand(d, beta, mode.max(f64::MIN_POSITIVE));
    let sd = (0.5 / beta).sqrt();
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = rng.sample(StandardNormal);
        let r = mode + sd * z;
        if r < 0.0 {
            continue;
        }
        let log_accept = log_integrand(d, beta, r) - gmax + beta * (r - mode) * (r - mode);
        let u: f64 = rng.random();
        if u.ln() < log_accept.min(0.0) {
            return Ok(r);
        }
    }
    Err(Error::Internal(format!(
        "radial rejection sampler exceeded {MAX_REJECTIONS} attempts (d={d}, beta={beta})"
    )))
}

/// `n` draws from the Gaussian using the supplied random stream.
pub fn sample_with_rng<R: Rng + ?Sized>(params: &GaussianParams, n: usize, rng: &mut R) -> Result<Vec<HyperPoint>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let d = params.dim();
    let mu = params.mu.coords();
    let alpha = params.mu.time();
    let mut out = Vec::with_capacity(n);
    let mut v = vec![0.0; d + 1];
    for _ in 0..n {
        let r = sample_radius(d, params.beta, rng)?;
        let mut norm2: f64 = 0.0;
        while norm2 == 0.0 {
            for c in v.iter_mut().take(d) {
                *c = rng.sample(StandardNormal);
            }
            norm2 = v[..d].iter().map(|c| c * c).sum();
        }
        let s = r / norm2.sqrt();
        v[d] = 0.0;
        for c in v.iter_mut().take(d) {
            *c *= s;
        }
        // Parallel transport from o to μ: v + ⟨μ,v⟩_L (o + μ)/(1 + α).
        let c = linner(mu, &v) / (1.0 + alpha);
        for j in 0..=d {
            v[j] += c * mu[j];
        }
        v[d] += c;
        out.push(geometry::exp_raw(mu, &v));
    }
    Ok(out)
}

/// `n` draws seeded from `seed` through ChaCha20.
pub fn sample(params: &GaussianParams, n: usize, seed: u64) -> Result<Vec<HyperPoint>> {
    sample_with_rng(params, n, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// One pass over the sample at `mu`: the normalized score residual and the
/// unnormalized MM direction `Σ w_i φ(α_i) x_i / 2`.
pub(crate) fn mm_pass(sample: &WeightedSample<'_>, mu: &[f64]) -> (f64, Vec<f64>) {
    let mut nu = vec![0.0; mu.len()];
    let mut b = 0.0;
    for (x, w) in sample.iter() {
        if w == 0.0 {
            continue;
        }
        let alpha = (-linner(mu, x.coords())).max(1.0);
        let c = w * log_coefficient(alpha);
        b += c * alpha;
        for (n, xj) in nu.iter_mut().zip(x.coords()) {
            *n += c * xj;
        }
    }
    // Σ w_i Log_μ(x_i) = ν − (Σ c_i α_i) μ.
    let score: Vec<f64> = nu.iter().zip(mu).map(|(n, m)| n - b * m).collect();
    let res = linner(&score, &score).max(0.0).sqrt() / sample.total_weight();
    (res, nu)
}

fn normalize_timelike(v: &[f64]) -> HyperPoint {
    HyperPoint::from_timelike(v).expect("positive combination of upper-sheet points is future timelike")
}

/// One MM update `ν/√(−⟨ν,ν⟩_L)` with `ν = Σ w_i φ(α_i) x_i`.
pub fn mm_step(sample: &WeightedSample<'_>, mu: &HyperPoint) -> Result<HyperPoint> {
    check_sample(sample, mu)?;
    Ok(normalize_timelike(&mm_pass(sample, mu.coords()).1))
}

fn check_sample(sample: &WeightedSample<'_>, mu: &HyperPoint) -> Result<()> {
    if sample.dim() != mu.dim() {
        return Err(Error::Contract(format!(
            "sample dimension {} but point dimension {}",
            sample.dim(),
            mu.dim()
        )));
    }
    Ok(())
}

/// Euclidean weighted mean of ambient coordinates pushed onto the sheet.
pub fn euclidean_init(sample: &WeightedSample<'_>) -> HyperPoint {
    let mut acc = vec![0.0; sample.dim() + 1];
    for (x, w) in sample.iter() {
        for (a, c) in acc.iter_mut().zip(x.coords()) {
            *a += w * c;
        }
    }
    normalize_timelike(&acc)
}

/// Iterates [`mm_step`] from `init` until the normalized score residual is at
/// most `tol` or `max_steps` updates have been taken.
pub fn weighted_barycenter(sample: &WeightedSample<'_>, init: &HyperPoint, tol: f64, max_steps: usize) -> Result<MMState> {
    check_sample(sample, init)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(barycenter_raw(sample, init.clone(), tol, max_steps))
}

pub(crate) fn barycenter_raw(sample: &WeightedSample<'_>, init: HyperPoint, tol: f64, max_steps: usize) -> MMState {
    let mut mu = init;
    let mut steps = 0;
    let (mut res, mut nu) = mm_pass(sample, mu.coords());
    while res > tol && steps < max_steps {
        mu = normalize_timelike(&nu);
        steps += 1;
        (res, nu) = mm_pass(sample, mu.coords());
    }
    MMState {
        objective: geometry::frechet_value_raw(sample, mu.coords()),
        iterate: mu,
        step_count: steps,
        residual: res,
        converged: res <= tol,
    }
}

/// Exactly `steps` MM updates from `init`, as in the truncated inner loop.
pub(crate) fn mm_steps_raw(sample: &WeightedSample<'_>, init: HyperPoint, steps: usize) -> HyperPoint {
    let mut mu = init;
    for _ in 0..steps {
        mu = normalize_timelike(&mm_pass(sample, mu.coords()).1);
    }
    mu
}

/// `clamp(dW/(2S))`, the Euclidean-limit moment match.
pub fn scale_init(d: usize, s: f64, w: f64, bx: &ScaleBox) -> f64 {
    if s <= 0.0 {
        return bx.hi;
    }
    bx.clamp(d as f64 * w / (2.0 * s))
}

/// Minimizes `βS + W A_d(β)` over the box by projected Newton with a bisection fallback.
pub fn solve_scale(s: f64, w: f64, model: &RadialModel, bx: &ScaleBox, init: f64) -> Result<ScaleSolveResult> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("dispersion S must be finite and nonnegative, got {s}")));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::Domain(format!("total weight W must be positive, got {w}")));
    }
    let bx = ScaleBox::new(bx.lo, bx.hi)?;
    if !bx.contains(init) {
        return Err(Error::Domain(format!(
            "initial beta {init} outside [{}, {}]",
            bx.lo, bx.hi
        )));
    }
    if s == 0.0 {
        return Ok(ScaleSolveResult {
            beta: bx.hi,
            iterations: 0,
            at_boundary: true,
        });
    }
    let target = s / w;
    // Objective derivative per unit weight, increasing in β.
    let grad = |b: f64| -> Result<f64> { Ok(model.derivatives(b)?.first + target) };
    let finish = |beta: f64, iterations: usize| -> Result<ScaleSolveResult> {
        let at_boundary = (beta == bx.lo && grad(beta)? >= 0.0) || (beta == bx.hi && grad(beta)? <= 0.0);
        Ok(ScaleSolveResult {
            beta,
            iterations,
            at_boundary,
        })
    };

    let mut beta = init;
    let mut outside = 0;
    for it in 1..=SCALE_MAX_ITER {
        let der = model.derivatives(beta)?;
        let raw = beta - (der.first + target) / der.second;
        if raw.is_finite() && bx.contains(raw) {
            outside = 0;
        } else {
            outside += 1;
        }
        let next = if raw.is_finite() { bx.clamp(raw) } else { beta };
        let step = (next - beta).abs();
        beta = next;
        if step <= SCALE_TOL {
            return finish(beta, it);
        }
        if outside >= 2 {
            return bisect_scale(&grad, &bx, it);
        }
    }
    finish(beta, SCALE_MAX_ITER)
}

fn bisect_scale(grad: &impl Fn(f64) -> Result<f64>, bx: &ScaleBox, done: usize) -> Result<ScaleSolveResult> {
    if grad(bx.lo)? >= 0.0 {
        return Ok(ScaleSolveResult {
            beta: bx.lo,
            iterations: done,
            at_boundary: true,
        });
    }
    if grad(bx.hi)? <= 0.0 {
        return Ok(ScaleSolveResult {
            beta: bx.hi,
            iterations: done,
            at_boundary: true,
        });
    }
    let (mut lo, mut hi) = (bx.lo, bx.hi);
    let mut it = done;
    while hi - lo > SCALE_TOL && it < done + 200 {
        let mid = 0.5 * (lo + hi);
        if grad(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    Ok(ScaleSolveResult {
        beta: 0.5 * (lo + hi),
        iterations: it,
        at_boundary: false,
    })
}

/// Weighted maximum-likelihood estimate of `(μ, β)` on the box.
pub fn weighted_mle(sample: &WeightedSample<'_>, model: &RadialModel, bx: &ScaleBox) -> Result<(GaussianParams, MleDiagnostics)> {
    check_model(model, sample.dim())?;
    let state = barycenter_raw(sample, euclidean_init(sample), MM_TOL, MM_MAX_STEPS);
    let w = sample.total_weight();
    let s = state.objective;
    let scale = solve_scale(s, w, model, bx, scale_init(sample.dim(), s, w, bx))?;
    Ok((
        GaussianParams {
            mu: state.iterate,
            beta: scale.beta,
        },
        MleDiagnostics {
            score_residual: state.residual,
            dispersion: s,
            mm_steps: state.step_count,
            mm_converged: state.converged,
            scale,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, exp_map, frechet_value, log_map, project_tangent};

    fn mu0() -> HyperPoint {
        let s = 1.5f64.sinh() / 2f64.sqrt();
        HyperPoint::from_spatial(&[s, s]).unwrap()
    }

    fn model(d: usize) -> RadialModel {
        RadialModel::quadrature(d).unwrap()
    }

    #[test]
    fn log_density_examples() {
        let m = model(2);
        let p = GaussianParams::new(mu0(), 2.0).unwrap();
        let a = m.log_normalizer(2.0).unwrap();
        assert_eq!(log_density(&p, &m, &mu0()).unwrap(), -a);

        let m1 = model(1);
        let p1 = GaussianParams::new(HyperPoint::origin(1), 1.0).unwrap();
        let x = HyperPoint::from_spatial(&[0.8f64.sinh()]).unwrap();
        let want = -std::f64::consts::PI.sqrt().ln() - 0.64;
        assert!((log_density(&p1, &m1, &x).unwrap() - want).abs() < 1e-12);
        assert!(log_density(&p, &m1, &x).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let m = model(2);
        let p = GaussianParams::new(mu0(), 2.0).unwrap();
        let o = &p.mu;
        // Midpoint rule in geodesic polar coordinates around μ.
        let (nr, nt, rmax) = (800, 64, 5.0);
        let (hr, ht) = (rmax / nr as f64, 2.0 * std::f64::consts::PI / nt as f64);
        let mut total = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) * hr;
            for j in 0..nt {
                let th = j as f64 * ht;
                let e = project_tangent(o, &[th.cos(), th.sin(), 0.0]).unwrap();
                let dir = e.scaled(r / e.norm());
                let x = exp_map(o, &dir).unwrap();
                total += log_density(&p, &m, &x).unwrap().exp() * r.sinh() * hr * ht;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn sampler_matches_radial_moment() {
        let m = model(2);
        let p = GaussianParams::new(mu0(), 2.0).unwrap();
        let n = 100_000;
        let xs = sample(&p, n, 11).unwrap();
        let d2: Vec<f64> = xs.iter().map(|x| distance(&p.mu, x).unwrap().powi(2)).collect();
        let mean = d2.iter().sum::<f64>() / n as f64;
        let var = d2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let m2 = m.radial_moment2(2.0).unwrap();
        assert!((mean - m2).abs() < 3.0 * se, "mean {mean} m2 {m2} se {se}");

        let mut acc = vec![0.0; 3];
        for x in &xs {
            let l = log_map(&p.mu, x).unwrap();
            for (a, c) in acc.iter_mut().zip(&l.vec) {
                *a += c / n as f64;
            }
        }
        let norm = linner(&acc, &acc).max(0.0).sqrt();
        assert!(norm <= 4.0 / (n as f64).sqrt() * m2.sqrt(), "{norm}");
    }

    #[test]
    fn sampler_large_beta_is_euclidean() {
        let p = GaussianParams::new(mu0(), 500.0).unwrap();
        let n = 20_000;
        let xs = sample(&p, n, 3).unwrap();
        let mean = xs.iter().map(|x| distance(&p.mu, x).unwrap()).sum::<f64>() / n as f64;
        // Rayleigh with σ² = 1/(2β): mean σ√(π/2).
        let want = (0.5f64 / 500.0).sqrt() * (std::f64::consts::PI / 2.0).sqrt();
        assert!(((mean - want) / want).abs() < 0.05);
    }

    #[test]
    fn sampler_is_seed_deterministic_and_handles_high_dimension() {
        let p = GaussianParams::new(HyperPoint::origin(3), 1.0).unwrap();
        assert_eq!(sample(&p, 5, 9).unwrap(), sample(&p, 5, 9).unwrap());
        assert!(sample(&p, 0, 9).is_err());
        let hi = GaussianParams::new(HyperPoint::origin(64), 50.0).unwrap();
        assert_eq!(sample(&hi, 100, 1).unwrap().len(), 100);
    }

    fn pts(coords: &[[f64; 2]]) -> Vec<HyperPoint> {
        coords.iter().map(|c| HyperPoint::from_spatial(c).unwrap()).collect()
    }

    #[test]
    fn mm_examples() {
        let x = pts(&[[0.4, -1.1]]);
        let w = [2.0];
        let s = WeightedSample::new(&x, &w).unwrap();
        let next = mm_step(&s, &HyperPoint::origin(2)).unwrap();
        assert!(distance(&next, &x[0]).unwrap() < 1e-12);

        let x = pts(&[[0.4, -1.1], [-2.0, 0.3]]);
        let w = [1.0, 1.0];
        let s = WeightedSample::new(&x, &w).unwrap();
        let st = weighted_barycenter(&s, &HyperPoint::origin(2), 1e-13, 500).unwrap();
        assert!(st.converged);
        let mid = crate::geometry::geodesic_point(&x[0], &x[1], 0.5).unwrap();
        assert!(distance(&st.iterate, &mid).unwrap() < 1e-9);
        let again = mm_step(&s, &st.iterate).unwrap();
        assert!(distance(&again, &st.iterate).unwrap() < 1e-9);
        let obj = frechet_value(&s, &mid).unwrap();
        assert!((st.objective - obj).abs() < 1e-10);
    }

    #[test]
    fn barycenter_zero_weights_and_uniqueness() {
        let x = pts(&[[0.4, -1.1], [-2.0, 0.3], [1.0, 1.0]]);
        let w = [0.0, 3.0, 0.0];
        let s = WeightedSample::new(&x, &w).unwrap();
        let st = weighted_barycenter(&s, &HyperPoint::origin(2), MM_TOL, MM_MAX_STEPS).unwrap();
        assert_eq!(st.step_count, 1);
        assert!(distance(&st.iterate, &x[1]).unwrap() < 1e-12);

        let w = [0.2, 1.0, 3.0];
        let s = WeightedSample::new(&x, &w).unwrap();
        let a = weighted_barycenter(&s, &x[0], MM_TOL, MM_MAX_STEPS).unwrap();
        let b = weighted_barycenter(&s, &x[1], MM_TOL, MM_MAX_STEPS).unwrap();
        assert!(distance(&a.iterate, &b.iterate).unwrap() < 1e-7);
        assert!(weighted_barycenter(&s, &x[0], 0.0, 10).is_err());
    }

    #[test]
    fn scale_examples() {
        let m = model(2);
        let bx = ScaleBox::new(1e-3, 50.0).unwrap();
        let m2 = m.radial_moment2(2.0).unwrap();
        let r = solve_scale(m2 * 10.0, 10.0, &m, &bx, scale_init(2, m2 * 10.0, 10.0, &bx)).unwrap();
        assert!((r.beta - 2.0).abs() < 1e-8 && !r.at_boundary, "{r:?}");
        let der = m.derivatives(r.beta).unwrap();
        assert!((der.first + m2).abs() <= 1e-10);

        let r = solve_scale(0.0, 10.0, &m, &bx, 1.0).unwrap();
        assert_eq!((r.beta, r.at_boundary), (50.0, true));
        let r = solve_scale(1e7, 10.0, &m, &bx, 1.0).unwrap();
        assert_eq!((r.beta, r.at_boundary), (1e-3, true));
        assert!(solve_scale(-1.0, 1.0, &m, &bx, 1.0).is_err());
        assert!(solve_scale(1.0, 0.0, &m, &bx, 1.0).is_err());
        assert!(solve_scale(1.0, 1.0, &m, &bx, 100.0).is_err());
    }

    #[test]
    fn mle_examples() {
        let m = model(2);
        let bx = ScaleBox::default();
        let x = pts(&[[0.3, 0.2]]);
        let (p, d) = weighted_mle(&WeightedSample::new(&x, &[1.0]).unwrap(), &m, &bx).unwrap();
        assert!(distance(&p.mu, &x[0]).unwrap() < 1e-12);
        assert_eq!(p.beta, 50.0);
        assert!(d.scale.at_boundary);

        let truth = GaussianParams::new(mu0(), 2.0).unwrap();
        let xs = sample(&truth, 200, 5).unwrap();
        let ones = vec![1.0; 200];
        let sevens = vec![7.0; 200];
        let (a, da) = weighted_mle(&WeightedSample::new(&xs, &ones).unwrap(), &m, &bx).unwrap();
        let (b, _) = weighted_mle(&WeightedSample::new(&xs, &sevens).unwrap(), &m, &bx).unwrap();
        assert!(distance(&a.mu, &b.mu).unwrap() < 1e-10);
        assert!((a.beta - b.beta).abs() < 1e-9 * a.beta);
        assert!(da.mm_converged && da.score_residual <= MM_TOL);
        assert!(distance(&a.mu, &truth.mu).unwrap() < 0.2);
        assert!((a.beta - 2.0).abs() < 0.5);
    }
}
