//! Information criteria, the `K` sweep, and the unbounded-likelihood demonstration.

use serde::{Deserialize, Serialize};

use super::{fit, log_sum_exp, FitConfig};
use crate::error::{Error, Result};
use crate::gaussian::{self, ScaleBox};
use crate::geometry::{dist_from_alpha, linner, HyperPoint, WeightedSample};
use crate::normalizer::RadialModel;

/// Weight of the collapsing component in [`demonstrate_singularity`].
const SPIKE_WEIGHT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    pub hqic: f64,
}

/// AIC, BIC and HQIC with `p = (K−1) + Kd + K` free parameters.
pub fn information_criteria(loglik: f64, n: usize, d: usize, k: usize) -> Result<Criteria> {
    if n <= 2 {
        return Err(Error::Domain(format!("information criteria need n > 2, got {n}")));
    }
    let p = ((k - 1) + k * d + k) as f64;
    let nf = n as f64;
    Ok(Criteria {
        aic: -2.0 * loglik + 2.0 * p,
        bic: -2.0 * loglik + p * nf.ln(),
        hqic: -2.0 * loglik + 2.0 * p * nf.ln().ln(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectRow {
    pub k: usize,
    pub loglik: f64,
    pub criteria: Criteria,
    pub aic_best: bool,
    pub bic_best: bool,
    pub hqic_best: bool,
    pub converged: bool,
}

/// Fits every `K` in `ks` with the same seed policy and flags each criterion's minimizer.
pub fn select_k(data: &[HyperPoint], model: &RadialModel, ks: &[usize], config: &FitConfig) -> Result<Vec<SelectRow>> {
    if ks.is_empty() {
        return Err(Error::Domain("K range is empty".into()));
    }
    if let Some(&kmax) = ks.iter().max() {
        if kmax > data.len() {
            return Err(Error::Domain(format!("K = {kmax} exceeds n = {}", data.len())));
        }
    }
    let d = model.dim();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let rep = fit(data, model, &FitConfig { k, ..config.clone() })?;
        let ll = rep.loglik();
        rows.push(SelectRow {
            k,
            loglik: ll,
            criteria: information_criteria(ll, data.len(), d, k)?,
            aic_best: false,
            bic_best: false,
            hqic_best: false,
            converged: rep.converged,
        });
    }
    let argmin = |f: &dyn Fn(&Criteria) -> f64| {
        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if f(&r.criteria) < f(&rows[best].criteria) {
                best = i;
            }
        }
        best
    };
    let (a, b, h) = (argmin(&|c| c.aic), argmin(&|c| c.bic), argmin(&|c| c.hqic));
    rows[a].aic_best = true;
    rows[b].bic_best = true;
    rows[h].hqic_best = true;
    Ok(rows)
}

/// Log-likelihood of a two-component mixture whose first component sits on
/// an observation with weight 0.1 and inverse scale `min(β, beta_cap)`, the
/// second being the fixed moment-matched fit to the whole sample.
///
/// The spike is placed on the observation farthest from its nearest
/// neighbour, so the other points stop feeling it as early as possible.
pub fn demonstrate_singularity(data: &[HyperPoint], model: &RadialModel, betas: &[f64], beta_cap: f64) -> Result<Vec<(f64, f64)>> {
    if data.len() < 2 {
        return Err(Error::Domain("singularity demonstration needs at least 2 points".into()));
    }
    let ones = vec![1.0; data.len()];
    let sample = WeightedSample::new(data, &ones)?;
    let (bg, _) = gaussian::weighted_mle(&sample, model, &ScaleBox::default())?;
    let bg_off = (1.0 - SPIKE_WEIGHT).ln() - model.log_normalizer(bg.beta)?;
    let spike = data[most_isolated(data)].coords();
    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        let b1 = beta.min(beta_cap);
        let off = SPIKE_WEIGHT.ln() - model.log_normalizer(b1)?;
        let mut ll = 0.0;
        for x in data {
            let r1 = dist_from_alpha(-linner(x.coords(), spike));
            let r2 = dist_from_alpha(-linner(x.coords(), bg.mu.coords()));
            ll += log_sum_exp(&[off - b1 * r1 * r1, bg_off - bg.beta * r2 * r2]);
        }
        out.push((beta, ll));
    }
    Ok(out)
}

fn most_isolated(data: &[HyperPoint]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in data.iter().enumerate() {
        let nn = data
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, y)| -linner(x.coords(), y.coords()))
            .fold(f64::INFINITY, f64::min);
        if nn > best.1 {
            best = (i, nn);
        }
    }
    best.0
}
