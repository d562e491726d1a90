//! JSON model files and responsibility tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianParams, ScaleBox};
use crate::geometry::HyperPoint;
use crate::mixture::{Criteria, FitConfig, FitReport, MixtureParams, Mode, Responsibilities};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub mode: Mode,
    pub inner_l: usize,
    pub seed: u64,
    pub restarts: usize,
    pub restart: usize,
    pub outer_tol: f64,
    pub iterations: usize,
    pub inner_mm_steps: usize,
    pub converged: bool,
}

/// A fitted mixture. Locations are ambient hyperboloid coordinates, time last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub dim: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub locations: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
    pub scale_box: ScaleBox,
    pub hull_radius_bound: f64,
    pub n: usize,
    pub loglik: f64,
    /// Absent when `n <= 2`.
    pub criteria: Option<Criteria>,
    pub fit: FitMetadata,
}

impl ModelFile {
    pub fn from_fit(report: &FitReport, config: &FitConfig, n: usize, criteria: Option<Criteria>) -> Self {
        let p = &report.final_params;
        ModelFile {
            schema_version: SCHEMA_VERSION,
            dim: p.dim(),
            k: p.k(),
            weights: p.weights.clone(),
            locations: p.components.iter().map(|c| c.mu.coords().to_vec()).collect(),
            betas: p.components.iter().map(|c| c.beta).collect(),
            scale_box: p.scale_box,
            hull_radius_bound: p.hull_radius_bound,
            n,
            loglik: report.loglik(),
            criteria,
            fit: FitMetadata {
                mode: config.mode,
                inner_l: config.inner_l,
                seed: config.seed,
                restarts: config.restarts,
                restart: report.restart,
                outer_tol: config.outer_tol,
                iterations: report.outer_iterations,
                inner_mm_steps: report.inner_mm_steps_total,
                converged: report.converged,
            },
        }
    }

    /// Rebuilds validated mixture parameters.
    pub fn params(&self) -> Result<MixtureParams> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Domain(format!("unsupported model schema version {}", self.schema_version)));
        }
        mixture_from_parts(&self.weights, &self.locations, &self.betas, self.scale_box, Some(self.hull_radius_bound), self.dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Generative mixture description for sampling. A [`ModelFile`] also parses as one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    /// Ambient hyperboloid coordinates, time last.
    pub locations: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
}

impl MixtureSpec {
    pub fn components(&self) -> Result<(Vec<f64>, Vec<GaussianParams>)> {
        let k = self.weights.len();
        if k == 0 || self.locations.len() != k || self.betas.len() != k {
            return Err(Error::Domain("mixture spec needs equally many weights, locations and betas (at least one)".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("mixture weights must be finite and nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("mixture weights sum to zero".into()));
        }
        let comps = self
            .locations
            .iter()
            .zip(&self.betas)
            .map(|(x, &b)| GaussianParams::new(HyperPoint::new(x.clone())?, b))
            .collect::<Result<Vec<_>>>()?;
        let d = comps[0].dim();
        if comps.iter().any(|c| c.dim() != d) {
            return Err(Error::Domain("mixture locations have mixed dimensions".into()));
        }
        Ok((self.weights.iter().map(|w| w / total).collect(), comps))
    }
}

fn mixture_from_parts(
    weights: &[f64],
    locations: &[Vec<f64>],
    betas: &[f64],
    scale_box: ScaleBox,
    hull: Option<f64>,
    dim: usize,
) -> Result<MixtureParams> {
    let k = weights.len();
    if locations.len() != k || betas.len() != k {
        return Err(Error::Domain("weights, locations and betas differ in length".into()));
    }
    let components = locations
        .iter()
        .zip(betas)
        .map(|(x, &b)| GaussianParams::new(HyperPoint::new(x.clone())?, b))
        .collect::<Result<Vec<_>>>()?;
    if components.iter().any(|c| c.dim() != dim) {
        return Err(Error::Domain(format!("locations do not match dim {dim}")));
    }
    let params = MixtureParams {
        weights: weights.to_vec(),
        components,
        scale_box,
        hull_radius_bound: hull.unwrap_or(f64::INFINITY),
    };
    params.validate()?;
    Ok(params)
}

/// One row per observation: `resp_0..resp_{K-1}` then the hard `assignment`.
pub fn responsibilities_csv(resp: &Responsibilities, assignment: &[usize]) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..resp.k()).map(|k| format!("resp_{k}")).collect();
    let _ = writeln!(out, "{},assignment", header.join(","));
    for (i, a) in assignment.iter().enumerate().take(resp.n()) {
        let row: Vec<String> = resp.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{},{}", row.join(","), a);
    }
    out
}
