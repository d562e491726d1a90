//! The radial normalizer `Z_d(β) = ω_{d−1} ∫₀^∞ e^{−βr²} sinh^{d−1}(r) dr`,
//! its logarithm `A_d(β)`, and the first two derivatives of `A_d`.
//!
//! Two independent evaluation routes are provided: composite Gauss–Legendre
//! quadrature of the radial integral, and the finite alternating sum of scaled
//! complementary error functions. Quadrature is the reference route; the
//! derivatives are always obtained as radial moment ratios by quadrature.
//! For repeated fitting a [`RadialModel`] can carry a precomputed grid on
//! `log β` that is interpolated with monotone cubic Hermite splines.

mod grid;
pub mod quadrature;
pub mod special;

use std::f64::consts::{LN_2, PI};
use std::path::Path;

pub use grid::Grid;
pub use special::{erfcx, sphere_area};

use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;
use quadrature::GaussLegendre;

/// Largest-term to result ratio beyond which the finite sum is rejected.
pub const CANCELLATION_LIMIT: f64 = 1e12;

/// Composite Gauss–Legendre layout for the radial integrals.
///
/// The log-integrand `g(r) = −βr² + (d−1) ln sinh r` is concave with
/// `g'' ≤ −2β`, so `g(r) ≤ g(r*) − β(r − r*)²` around its maximiser `r*`.
/// Integrating over `r* ± half_width/√β` therefore drops at most a factor
/// `exp(−half_width²)` of the peak; the default of 12 gives `e^{−144}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub half_width: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panels: 16,
            nodes_per_panel: 20,
            half_width: 12.0,
        }
    }
}

impl QuadratureConfig {
    /// Integration window `[a, b]` for dimension `d` and inverse scale `β`.
    pub fn window(&self, d: usize, beta: f64) -> (f64, f64) {
        let peak = radial_mode(d, beta);
        let s = self.half_width / beta.sqrt();
        ((peak - s).max(0.0), peak + s)
    }
}

/// How a [`RadialModel`] evaluates `A_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    ClosedForm,
    Grid,
}

/// `A_d(β)` together with `A_d'(β) = −E[R²]` and `A_d''(β) = Var(R²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Log-normalizer and its derivatives for a fixed dimension.
#[derive(Debug, Clone)]
pub struct RadialModel {
    dim: usize,
    method: Method,
    quad: QuadratureConfig,
    grid: Option<Grid>,
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::Domain(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta must be finite and positive, got {beta}")));
    }
    Ok(())
}

#[inline]
fn ln_sinh(r: f64) -> f64 {
    if r < 1.0 {
        r.sinh().ln()
    } else {
        r + (-(-2.0 * r).exp()).ln_1p() - LN_2
    }
}

#[inline]
pub(crate) fn log_integrand(d: usize, beta: f64, r: f64) -> f64 {
    if d == 1 {
        -beta * r * r
    } else {
        -beta * r * r + (d - 1) as f64 * ln_sinh(r)
    }
}

/// Maximiser of `−βr² + (d−1) ln sinh r`, the mode of the radial law.
pub fn radial_mode(d: usize, beta: f64) -> f64 {
    if d == 1 {
        return 0.0;
    }
    let k = (d - 1) as f64;
    // coth r lies between max(1, 1/r) and 1 + 1/r.
    let mut lo = (k / (2.0 * beta)).max((k / (2.0 * beta)).sqrt());
    let mut hi = (k + (k * k + 8.0 * beta * k).sqrt()) / (4.0 * beta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = -2.0 * beta * mid + k / mid.tanh();
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Log-normalizer, second radial moment and variance of `R²` from one set of
/// quadrature nodes.
pub fn radial_stats(d: usize, beta: f64, cfg: &QuadratureConfig) -> Result<Derivatives> {
    check_dim(d)?;
    check_beta(beta)?;
    let rule;
    let gl = if cfg.nodes_per_panel == 20 {
        GaussLegendre::twenty()
    } else {
        rule = GaussLegendre::new(cfg.nodes_per_panel);
        &rule
    };
    let peak = radial_mode(d, beta);
    let gmax = log_integrand(d, beta, peak.max(f64::MIN_POSITIVE));
    let (a, b) = cfg.window(d, beta);
    let mut nodes = Vec::with_capacity(cfg.panels * gl.len());
    gl.for_each_composite(a, b, cfg.panels, |r, w| {
        let f = w * (log_integrand(d, beta, r) - gmax).exp();
        nodes.push((r * r, f));
    });
    let i0: f64 = nodes.iter().map(|(_, f)| f).sum();
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::Internal(format!(
            "radial quadrature degenerate at d={d}, beta={beta}"
        )));
    }
    let m2 = nodes.iter().map(|(r2, f)| r2 * f).sum::<f64>() / i0;
    let var = nodes
        .iter()
        .map(|(r2, f)| {
            let c = r2 - m2;
            c * c * f
        })
        .sum::<f64>()
        / i0;
    Ok(Derivatives {
        value: sphere_area(d).ln() + gmax + i0.ln(),
        first: -m2,
        second: var,
    })
}

/// `Z_d(β)` by composite Gauss–Legendre quadrature of the radial integral.
pub fn z_quadrature(d: usize, beta: f64) -> Result<f64> {
    Ok(radial_stats(d, beta, &QuadratureConfig::default())?.value.exp())
}

/// `ln Z_d(β)` from the finite erfcx sum.
pub fn log_z_closed_form(d: usize, beta: f64) -> Result<f64> {
    check_dim(d)?;
    check_beta(beta)?;
    let rb = beta.sqrt();
    let terms: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            let c = (2 * j) as f64 - (d - 1) as f64;
            let sign = if (d - 1 - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            let log_mag = special::binomial(d - 1, j).ln() + special::ln_erfcx(-c / (2.0 * rb));
            (sign, log_mag)
        })
        .collect();
    let lmax = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|(s, l)| s * (l - lmax).exp()).sum();
    let ratio = 1.0 / sum.abs();
    if !(sum > 0.0) || ratio > CANCELLATION_LIMIT {
        return Err(Error::PrecisionLoss {
            dim: d,
            beta,
            ratio: if sum > 0.0 { ratio } else { f64::INFINITY },
        });
    }
    Ok(sphere_area(d).ln() + 0.5 * PI.ln() - d as f64 * LN_2 - 0.5 * beta.ln() + lmax + sum.ln())
}

/// `Z_d(β)` from the finite erfcx sum.
pub fn z_closed_form(d: usize, beta: f64) -> Result<f64> {
    Ok(log_z_closed_form(d, beta)?.exp())
}

/// Builds a grid model with `knots` log-spaced points on `[beta_lo, beta_hi]`.
pub fn build_grid(d: usize, beta_lo: f64, beta_hi: f64, knots: usize) -> Result<RadialModel> {
    RadialModel::grid(d, beta_lo, beta_hi, knots)
}

impl RadialModel {
    pub fn new(dim: usize, method: Method) -> Result<Self> {
        check_dim(dim)?;
        if method == Method::Grid {
            return Err(Error::Contract(
                "grid models are built with RadialModel::grid".into(),
            ));
        }
        Ok(RadialModel {
            dim,
            method,
            quad: QuadratureConfig::default(),
            grid: None,
        })
    }

    pub fn quadrature(dim: usize) -> Result<Self> {
        Self::new(dim, Method::Quadrature)
    }

    pub fn closed_form(dim: usize) -> Result<Self> {
        Self::new(dim, Method::ClosedForm)
    }

    pub fn grid(dim: usize, beta_lo: f64, beta_hi: f64, knots: usize) -> Result<Self> {
        check_dim(dim)?;
        let quad = QuadratureConfig::default();
        let grid = Grid::build(dim, beta_lo, beta_hi, knots, &quad)?;
        Ok(Self::from_grid(grid))
    }

    pub fn from_grid(grid: Grid) -> Self {
        RadialModel {
            dim: grid.dim(),
            method: Method::Grid,
            quad: QuadratureConfig::default(),
            grid: Some(grid),
        }
    }

    /// Loads a cached grid if `path` holds one for `dim` covering `[lo, hi]`,
    /// otherwise builds it and writes the cache.
    pub fn cached_grid(path: &Path, dim: usize, beta_lo: f64, beta_hi: f64, knots: usize) -> Result<Self> {
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let grid = Grid::from_text(&text, path)?;
            if grid.dim() == dim && grid.beta_lo() <= beta_lo && grid.beta_hi() >= beta_hi {
                return Ok(Self::from_grid(grid));
            }
        }
        let model = Self::grid(dim, beta_lo, beta_hi, knots)?;
        if let Some(g) = &model.grid {
            crate::io::write_atomic(path, g.to_text().as_bytes())?;
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn grid_table(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    fn direct(&self, beta: f64) -> Result<Derivatives> {
        radial_stats(self.dim, beta, &self.quad)
    }

    /// `A_d(β)`, `A_d'(β)` and `A_d''(β)` by the model's method.
    pub fn derivatives(&self, beta: f64) -> Result<Derivatives> {
        check_beta(beta)?;
        match self.method {
            Method::Quadrature => self.direct(beta),
            Method::ClosedForm => {
                let mut d = self.direct(beta)?;
                d.value = log_z_closed_form(self.dim, beta)?;
                Ok(d)
            }
            Method::Grid => match self.grid.as_ref().and_then(|g| g.eval(beta)) {
                Some(d) => Ok(d),
                None => self.direct(beta),
            },
        }
    }

    /// `A_d(β) = ln Z_d(β)`.
    pub fn log_normalizer(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        match self.method {
            Method::ClosedForm => log_z_closed_form(self.dim, beta),
            _ => Ok(self.derivatives(beta)?.value),
        }
    }

    /// `m_{2,d}(β) = −A_d'(β) = E_β[R²]`.
    pub fn radial_moment2(&self, beta: f64) -> Result<f64> {
        Ok(-self.derivatives(beta)?.first)
    }

    /// `A_d''(β) = Var_β(R²)`.
    pub fn radial_variance_r2(&self, beta: f64) -> Result<f64> {
        Ok(self.derivatives(beta)?.second)
    }
}
