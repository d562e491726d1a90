//! Finite mixtures of Riemannian Gaussians on a constrained parameter space:
//! responsibilities, exact EM, generalized EM with truncated MM inner loops,
//! and model selection.

mod init;
mod select;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use init::initialize;
pub use select::{demonstrate_singularity, information_criteria, select_k, Criteria, SelectRow};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianParams, ScaleBox, MM_MAX_STEPS, MM_TOL};
use crate::geometry::{dist_from_alpha, linner, points_radius, HyperPoint, WeightedSample};
use crate::normalizer::RadialModel;

/// Slack on the hull-radius post-check.
const HULL_SLACK: f64 = 1e-8;
/// Components with `W_k` below this fraction of `n` are reseeded.
const EMPTY_FRACTION: f64 = 1e-8;

/// Mixing weights, components and the constraint box.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianParams>,
    pub scale_box: ScaleBox,
    /// Radius of an origin-centred ball containing the data.
    pub hull_radius_bound: f64,
}

impl MixtureParams {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Checks the simplex, box and hull-radius invariants.
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.weights.len() != self.components.len() {
            return Err(Error::Contract("mixture needs matching, nonempty weights and components".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("mixing weights must lie on the simplex (sum {sum})")));
        }
        let d = self.dim();
        for (k, c) in self.components.iter().enumerate() {
            if c.dim() != d {
                return Err(Error::Contract(format!("component {k} has dimension {}", c.dim())));
            }
            if !self.scale_box.contains(c.beta) {
                return Err(Error::Contract(format!("component {k} beta {} outside box", c.beta)));
            }
            let r = c.mu.time().max(1.0).acosh();
            if r > self.hull_radius_bound + HULL_SLACK {
                return Err(Error::Internal(format!(
                    "component {k} location at radius {r} beyond hull bound {}",
                    self.hull_radius_bound
                )));
            }
        }
        Ok(())
    }

    /// Reorders components (and weights) so that new slot `j` holds old `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        MixtureParams {
            weights: perm.iter().map(|&k| self.weights[k]).collect(),
            components: perm.iter().map(|&k| self.components[k].clone()).collect(),
            ..self.clone()
        }
    }
}

/// Row-stochastic `n × K` responsibility matrix with the per-row log mixture density.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    values: Vec<f64>,
    row_loglik: Vec<f64>,
}

impl Responsibilities {
    /// Wraps a row-major matrix; rows must be nonnegative and sum to one.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        if n == 0 || k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Contract("responsibilities must be a nonempty rectangular matrix".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            let s: f64 = r.iter().sum();
            if r.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::Contract(format!("row {i} is not a probability vector")));
            }
        }
        Ok(Responsibilities {
            n,
            k,
            values: rows.concat(),
            row_loglik: vec![f64::NAN; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.k + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, k)).collect()
    }

    /// `W_k = Σ_i r_ik`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.k];
        for i in 0..self.n {
            for (wk, r) in w.iter_mut().zip(self.row(i)) {
                *wk += r;
            }
        }
        w
    }

    /// `log Σ_k π_k f_k(x_i)` from the E-step that produced this matrix.
    pub fn row_loglik(&self) -> &[f64] {
        &self.row_loglik
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact M-step: barycenters converged to the score tolerance.
    Em,
    /// Generalized EM: `inner_l` MM steps per component per iteration.
    Gem,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Em => "em",
            Mode::Gem => "gem",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub k: usize,
    pub mode: Mode,
    pub inner_l: usize,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub restarts: usize,
    pub seed: u64,
    pub scale_box: ScaleBox,
    pub mm_tol: f64,
    pub mm_max_steps: usize,
    /// Worker threads for the E-step, M-step and restarts; 1 runs sequentially.
    pub threads: usize,
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        FitConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain("K must be at least 1".into()));
        }
        if self.inner_l == 0 {
            return Err(Error::Domain("inner step budget L must be at least 1".into()));
        }
        if !(self.outer_tol > 0.0) || !(self.mm_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if self.restarts == 0 || self.max_outer == 0 {
            return Err(Error::Domain("restarts and max_outer must be at least 1".into()));
        }
        ScaleBox::new(self.scale_box.lo, self.scale_box.hi)?;
        Ok(())
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            k: 1,
            mode: Mode::Em,
            inner_l: 1,
            outer_tol: 1e-8,
            max_outer: 500,
            restarts: 1,
            seed: 0,
            scale_box: ScaleBox::default(),
            mm_tol: MM_TOL,
            mm_max_steps: MM_MAX_STEPS,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    /// Log-likelihood at the initial point and after every outer iteration.
    pub loglik_trace: Vec<f64>,
    /// Seconds since the start of the fit at each trace entry.
    pub time_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_mm_steps_total: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub final_params: MixtureParams,
    pub responsibilities: Responsibilities,
    /// Components whose `β` ended on the box boundary.
    pub at_boundary: Vec<bool>,
    /// Restart that produced this report.
    pub restart: usize,
}

impl FitReport {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().unwrap()
    }
}

fn check_data(data: &[HyperPoint], model: &RadialModel) -> Result<()> {
    let first = data.first().ok_or_else(|| Error::Domain("data set is empty".into()))?;
    let d = first.dim();
    if model.dim() != d {
        return Err(Error::Contract(format!(
            "radial model dimension {} does not match data dimension {d}",
            model.dim()
        )));
    }
    if data.iter().any(|x| x.dim() != d) {
        return Err(Error::Contract("data points have mixed dimensions".into()));
    }
    Ok(())
}

fn map_rows<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

fn log_sum_exp(eta: &[f64]) -> f64 {
    let m = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + eta.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
}

fn e_step(params: &MixtureParams, model: &RadialModel, data: &[HyperPoint], parallel: bool) -> Result<(Responsibilities, f64)> {
    let k = params.k();
    let mut offset = Vec::with_capacity(k);
    for (p, c) in params.weights.iter().zip(&params.components) {
        offset.push(p.ln() - model.log_normalizer(c.beta)?);
    }
    let rows = map_rows(data.len(), parallel, |i| {
        let x = data[i].coords();
        let eta: Vec<f64> = params
            .components
            .iter()
            .zip(&offset)
            .map(|(c, off)| {
                let r = dist_from_alpha(-linner(x, c.mu.coords()));
                off - c.beta * r * r
            })
            .collect();
        let lse = log_sum_exp(&eta);
        let resp: Vec<f64> = eta.iter().map(|e| (e - lse).exp()).collect();
        (resp, lse)
    });
    let mut values = Vec::with_capacity(data.len() * k);
    let mut row_loglik = Vec::with_capacity(data.len());
    let mut total = 0.0;
    for (i, (resp, lse)) in rows.into_iter().enumerate() {
        if !lse.is_finite() {
            return Err(Error::Contract(format!("non-finite log-likelihood at observation {i}")));
        }
        total += lse;
        values.extend(resp);
        row_loglik.push(lse);
    }
    Ok((
        Responsibilities {
            n: data.len(),
            k,
            values,
            row_loglik,
        },
        total,
    ))
}

/// Posterior responsibilities and the observed-data log-likelihood.
pub fn responsibilities(params: &MixtureParams, model: &RadialModel, data: &[HyperPoint]) -> Result<(Responsibilities, f64)> {
    check_data(data, model)?;
    params.validate()?;
    e_step(params, model, data, false)
}

fn shapes_agree(params: &MixtureParams, resp: &Responsibilities, data: &[HyperPoint]) -> Result<()> {
    if resp.n != data.len() || resp.k != params.k() {
        return Err(Error::Contract(format!(
            "responsibilities are {}x{} but data has {} rows and the mixture {} components",
            resp.n,
            resp.k,
            data.len(),
            params.k()
        )));
    }
    Ok(())
}

/// `Σ_k [W_k log π_k − W_k A_d(β_k) − β_k S_k(μ_k)]`; `−∞` when a component
/// with positive responsibility mass has zero weight.
pub fn q_surrogate(params: &MixtureParams, resp: &Responsibilities, model: &RadialModel, data: &[HyperPoint]) -> Result<f64> {
    check_data(data, model)?;
    shapes_agree(params, resp, data)?;
    let w = resp.column_sums();
    let mut q = 0.0;
    for (k, c) in params.components.iter().enumerate() {
        if w[k] == 0.0 {
            continue;
        }
        if params.weights[k] == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let col = resp.column(k);
        let s: f64 = data
            .iter()
            .zip(&col)
            .map(|(x, r)| {
                let d = dist_from_alpha(-linner(x.coords(), c.mu.coords()));
                r * d * d
            })
            .sum();
        q += w[k] * params.weights[k].ln() - w[k] * model.log_normalizer(c.beta)? - c.beta * s;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy)]
enum Location {
    Exact { tol: f64, max_steps: usize },
    Truncated(usize),
}

fn m_step(
    resp: &Responsibilities,
    model: &RadialModel,
    data: &[HyperPoint],
    prev: &MixtureParams,
    loc: Location,
    parallel: bool,
) -> Result<(MixtureParams, usize)> {
    check_data(data, model)?;
    shapes_agree(prev, resp, data)?;
    let n = data.len() as f64;
    let kk = prev.k();
    let w = resp.column_sums();
    let bx = prev.scale_box;

    let update = |k: usize| -> Result<Option<(GaussianParams, usize)>> {
        if w[k] < EMPTY_FRACTION * n {
            return Ok(None);
        }
        let col = resp.column(k);
        let sample = WeightedSample::new(data, &col)?;
        let prev_c = &prev.components[k];
        let (mu, steps) = match loc {
            Location::Exact { tol, max_steps } => {
                let st = gaussian::barycenter_raw(&sample, prev_c.mu.clone(), tol, max_steps);
                (st.iterate, st.step_count)
            }
            Location::Truncated(l) => (gaussian::mm_steps_raw(&sample, prev_c.mu.clone(), l), l),
        };
        let s = crate::geometry::frechet_value_raw(&sample, mu.coords());
        let wk = sample.total_weight();
        let scale = gaussian::solve_scale(s, wk, model, &bx, bx.clamp(prev_c.beta))?;
        Ok(Some((GaussianParams { mu, beta: scale.beta }, steps)))
    };
    let updated: Vec<Result<Option<(GaussianParams, usize)>>> = if parallel {
        (0..kk).into_par_iter().map(update).collect()
    } else {
        (0..kk).map(update).collect()
    };

    let mut components = Vec::with_capacity(kk);
    let mut weights = Vec::with_capacity(kk);
    let mut steps = 0;
    let mut empty = Vec::new();
    for (k, u) in updated.into_iter().enumerate() {
        match u? {
            Some((c, s)) => {
                components.push(c);
                weights.push(w[k] / n);
                steps += s;
            }
            None => {
                components.push(prev.components[k].clone());
                weights.push(0.0);
                empty.push(k);
            }
        }
    }
    if !empty.is_empty() {
        reseed_empty(&mut components, &mut weights, &empty, resp, data);
    }
    let total: f64 = weights.iter().sum();
    for p in &mut weights {
        *p /= total;
    }
    let params = MixtureParams {
        weights,
        components,
        scale_box: bx,
        hull_radius_bound: prev.hull_radius_bound,
    };
    params.validate()?;
    Ok((params, steps))
}

/// Moves each empty component to the worst-explained observation with weight `1/(10K)`.
fn reseed_empty(components: &mut [GaussianParams], weights: &mut [f64], empty: &[usize], resp: &Responsibilities, data: &[HyperPoint]) {
    let kk = components.len() as f64;
    let floor = 1.0 / (10.0 * kk);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let ll = resp.row_loglik();
    order.sort_by(|&a, &b| ll[a].total_cmp(&ll[b]).then(a.cmp(&b)));
    let live: f64 = weights.iter().sum();
    let spare = 1.0 - floor * empty.len() as f64;
    for w in weights.iter_mut() {
        *w *= spare / live;
    }
    for (slot, &k) in empty.iter().enumerate() {
        components[k].mu = data[order[slot % order.len()]].clone();
        weights[k] = floor;
    }
}

/// Exact M-step: closed-form weights, converged barycenters, Newton scales.
/// Returns the new parameters and the total MM steps taken.
pub fn m_step_exact(resp: &Responsibilities, model: &RadialModel, data: &[HyperPoint], prev: &MixtureParams) -> Result<(MixtureParams, usize)> {
    m_step(
        resp,
        model,
        data,
        prev,
        Location::Exact {
            tol: MM_TOL,
            max_steps: MM_MAX_STEPS,
        },
        false,
    )
}

/// Generalized M-step: each location advanced by exactly `l` MM steps.
pub fn m_step_gem(resp: &Responsibilities, model: &RadialModel, data: &[HyperPoint], prev: &MixtureParams, l: usize) -> Result<(MixtureParams, usize)> {
    if l == 0 {
        return Err(Error::Domain("inner step budget L must be at least 1".into()));
    }
    m_step(resp, model, data, prev, Location::Truncated(l), false)
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the outer EM/GEM loop from `init`.
pub fn fit_from_init(data: &[HyperPoint], model: &RadialModel, config: &FitConfig, init: MixtureParams) -> Result<FitReport> {
    config.validate()?;
    check_data(data, model)?;
    init.validate()?;
    with_threads(config.threads, || run(data, model, config, init, 0))?
}

fn run(data: &[HyperPoint], model: &RadialModel, config: &FitConfig, init: MixtureParams, restart: usize) -> Result<FitReport> {
    let parallel = config.threads > 1;
    let start = Instant::now();
    let loc = match config.mode {
        Mode::Em => Location::Exact {
            tol: config.mm_tol,
            max_steps: config.mm_max_steps,
        },
        Mode::Gem => Location::Truncated(config.inner_l),
    };
    let mut params = init;
    let (mut resp, mut ll) = e_step(&params, model, data, parallel)?;
    let mut trace = vec![ll];
    let mut times = vec![start.elapsed().as_secs_f64()];
    let mut inner = 0;
    let mut converged = false;
    let mut iters = 0;
    while iters < config.max_outer {
        let (next, steps) = m_step(&resp, model, data, &params, loc, parallel)?;
        inner += steps;
        iters += 1;
        let (r, l) = e_step(&next, model, data, parallel)?;
        params = next;
        resp = r;
        let prev = ll;
        ll = l;
        trace.push(ll);
        times.push(start.elapsed().as_secs_f64());
        if (ll - prev).abs() / (1.0 + prev.abs()) < config.outer_tol {
            converged = true;
            break;
        }
    }
    let at_boundary = params
        .components
        .iter()
        .map(|c| c.beta <= params.scale_box.lo || c.beta >= params.scale_box.hi)
        .collect();
    Ok(FitReport {
        loglik_trace: trace,
        time_trace: times,
        outer_iterations: iters,
        inner_mm_steps_total: inner,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        final_params: params,
        responsibilities: resp,
        at_boundary,
        restart,
    })
}

/// Fits a `K`-component mixture, keeping the best of `config.restarts` runs.
pub fn fit(data: &[HyperPoint], model: &RadialModel, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    check_data(data, model)?;
    if data.len() < config.k {
        return Err(Error::Domain(format!(
            "need at least K = {} observations, got {}",
            config.k,
            data.len()
        )));
    }
    with_threads(config.threads, || {
        let one = |restart: usize| -> Result<FitReport> {
            let init = initialize(data, model, config, restart)?;
            run(data, model, config, init, restart)
        };
        let reports: Vec<Result<FitReport>> = if config.threads > 1 {
            (0..config.restarts).into_par_iter().map(one).collect()
        } else {
            (0..config.restarts).map(one).collect()
        };
        let mut best: Option<FitReport> = None;
        for r in reports {
            let r = r?;
            if best.as_ref().is_none_or(|b| r.loglik() > b.loglik()) {
                best = Some(r);
            }
        }
        Ok(best.expect("at least one restart"))
    })?
}

/// Radius bound used for the location constraint of a data set.
pub fn data_hull_radius(data: &[HyperPoint]) -> f64 {
    points_radius(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample;
    use crate::geometry::distance;

    fn model() -> RadialModel {
        RadialModel::grid(2, 1e-3, 50.0, 256).unwrap()
    }

    fn centers(rho: f64) -> Vec<HyperPoint> {
        let a = rho.sinh() / 2f64.sqrt();
        [[a, a], [-a, a], [-a, -a], [a, -a]]
            .iter()
            .map(|c| HyperPoint::from_spatial(c).unwrap())
            .collect()
    }

    fn four_clusters(n_each: usize, seed: u64) -> (Vec<HyperPoint>, Vec<usize>) {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (k, c) in centers(2.0).into_iter().enumerate() {
            let p = GaussianParams::new(c, 1.5).unwrap();
            data.extend(sample(&p, n_each, seed + k as u64).unwrap());
            labels.extend(std::iter::repeat_n(k, n_each));
        }
        (data, labels)
    }

    fn truth_params(data: &[HyperPoint]) -> MixtureParams {
        MixtureParams {
            weights: vec![0.25; 4],
            components: centers(2.0).into_iter().map(|c| GaussianParams::new(c, 1.5).unwrap()).collect(),
            scale_box: ScaleBox::default(),
            hull_radius_bound: data_hull_radius(data),
        }
    }

    #[test]
    fn single_component_responsibilities() {
        let m = model();
        let data = sample(&GaussianParams::new(HyperPoint::origin(2), 1.0).unwrap(), 30, 1).unwrap();
        let c = GaussianParams::new(data[3].clone(), 0.8).unwrap();
        let p = MixtureParams {
            weights: vec![1.0],
            components: vec![c.clone()],
            scale_box: ScaleBox::default(),
            hull_radius_bound: data_hull_radius(&data),
        };
        let (r, ll) = responsibilities(&p, &m, &data).unwrap();
        assert!((0..30).all(|i| r.get(i, 0) == 1.0));
        let direct: f64 = data.iter().map(|x| gaussian::log_density(&c, &m, x).unwrap()).sum();
        assert!((ll - direct).abs() < 1e-10 * direct.abs());
        let q = q_surrogate(&p, &r, &m, &data).unwrap();
        assert!((q - ll).abs() < 1e-10 * ll.abs());
    }

    #[test]
    fn identical_components_follow_weights() {
        let m = model();
        let data = sample(&GaussianParams::new(HyperPoint::origin(2), 1.0).unwrap(), 20, 2).unwrap();
        let c = GaussianParams::new(HyperPoint::origin(2), 1.3).unwrap();
        let p = MixtureParams {
            weights: vec![0.3, 0.7],
            components: vec![c.clone(), c],
            scale_box: ScaleBox::default(),
            hull_radius_bound: data_hull_radius(&data),
        };
        let (r, _) = responsibilities(&p, &m, &data).unwrap();
        for i in 0..20 {
            assert!((r.get(i, 0) - 0.3).abs() < 1e-14);
            assert!((r.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_component_gets_no_mass_and_q_sentinel() {
        let m = model();
        let data = sample(&GaussianParams::new(HyperPoint::origin(2), 1.0).unwrap(), 10, 3).unwrap();
        let c = GaussianParams::new(HyperPoint::origin(2), 1.0).unwrap();
        let p = MixtureParams {
            weights: vec![1.0, 0.0],
            components: vec![c.clone(), c],
            scale_box: ScaleBox::default(),
            hull_radius_bound: data_hull_radius(&data),
        };
        let (r, _) = responsibilities(&p, &m, &data).unwrap();
        assert!((0..10).all(|i| r.get(i, 1) == 0.0));
        let uniform = Responsibilities::from_rows(&vec![vec![0.5, 0.5]; 10]).unwrap();
        assert_eq!(q_surrogate(&p, &uniform, &m, &data).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn indicator_m_step_gives_cluster_barycenters() {
        let m = model();
        let (data, labels) = four_clusters(25, 10);
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| (0..4).map(|k| if k == l { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = Responsibilities::from_rows(&rows).unwrap();
        let prev = truth_params(&data);
        let (next, steps) = m_step_exact(&r, &m, &data, &prev).unwrap();
        assert!(steps > 0);
        for k in 0..4 {
            assert!((next.weights[k] - 0.25).abs() < 1e-15);
            let pts = &data[k * 25..(k + 1) * 25];
            let ones = vec![1.0; 25];
            let s = WeightedSample::new(pts, &ones).unwrap();
            let st = gaussian::weighted_barycenter(&s, &pts[0], 1e-12, 500).unwrap();
            assert!(distance(&st.iterate, &next.components[k].mu).unwrap() < 1e-8);
        }
    }

    #[test]
    fn em_step_from_truth_does_not_decrease_loglik() {
        let m = model();
        let (data, _) = four_clusters(50, 20);
        let p = truth_params(&data);
        let (r, ll0) = responsibilities(&p, &m, &data).unwrap();
        let q0 = q_surrogate(&p, &r, &m, &data).unwrap();
        let (next, _) = m_step_exact(&r, &m, &data, &p).unwrap();
        let q1 = q_surrogate(&next, &r, &m, &data).unwrap();
        let (_, ll1) = responsibilities(&next, &m, &data).unwrap();
        assert!(q1 >= q0 - 1e-9);
        assert!(ll1 >= ll0 - 1e-8);
        assert!(q1 - q0 <= ll1 - ll0 + 1e-8);

        let (gem, steps) = m_step_gem(&r, &m, &data, &p, 1).unwrap();
        assert_eq!(steps, 4);
        for k in 0..4 {
            let col = r.column(k);
            let s = WeightedSample::new(&data, &col).unwrap();
            let before = crate::geometry::frechet_value(&s, &p.components[k].mu).unwrap();
            let after = crate::geometry::frechet_value(&s, &gem.components[k].mu).unwrap();
            assert!(after <= before + 1e-12);
        }
        let (long, _) = m_step_gem(&r, &m, &data, &p, 300).unwrap();
        for k in 0..4 {
            assert!(distance(&long.components[k].mu, &next.components[k].mu).unwrap() < 1e-8);
        }
    }

    #[test]
    fn single_component_fit_matches_mle() {
        let m = model();
        let data = sample(&GaussianParams::new(centers(1.0)[0].clone(), 2.0).unwrap(), 200, 4).unwrap();
        let report = fit(&data, &m, &FitConfig::new(1)).unwrap();
        let ones = vec![1.0; data.len()];
        let (mle, _) = gaussian::weighted_mle(&WeightedSample::new(&data, &ones).unwrap(), &m, &ScaleBox::default()).unwrap();
        let c = &report.final_params.components[0];
        assert!(distance(&c.mu, &mle.mu).unwrap() < 1e-9);
        assert!((c.beta - mle.beta).abs() < 1e-9);
    }

    #[test]
    fn fit_recovers_separated_clusters_and_ascends() {
        let m = model();
        let (data, _) = four_clusters(100, 30);
        for mode in [Mode::Em, Mode::Gem] {
            let cfg = FitConfig {
                mode,
                ..FitConfig::new(4)
            };
            let rep = fit(&data, &m, &cfg).unwrap();
            assert!(rep.converged);
            for w in rep.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8);
            }
            let truth = centers(2.0);
            for c in &rep.final_params.components {
                let best = truth.iter().map(|t| distance(t, &c.mu).unwrap()).fold(f64::INFINITY, f64::min);
                assert!(best < 0.3, "{mode}: {best}");
            }
        }
    }

    #[test]
    fn degenerate_and_undersized_inputs() {
        let m = model();
        let same = vec![HyperPoint::origin(2); 5];
        let rep = fit(&same, &m, &FitConfig::new(1)).unwrap();
        assert_eq!(rep.final_params.components[0].beta, 50.0);
        assert!(rep.at_boundary[0]);
        assert!(matches!(fit(&same, &m, &FitConfig::new(6)), Err(Error::Domain(_))));
    }

    #[test]
    fn threads_do_not_change_results() {
        let m = model();
        let (data, _) = four_clusters(40, 40);
        let cfg = FitConfig {
            restarts: 2,
            ..FitConfig::new(4)
        };
        let a = fit(&data, &m, &cfg).unwrap();
        let b = fit(&data, &m, &FitConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a.loglik_trace, b.loglik_trace);
        assert_eq!(a.final_params, b.final_params);
    }
}
