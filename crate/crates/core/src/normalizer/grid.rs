//! Tabulated `A_d`, `A_d'`, `A_d''` on a log-spaced `β` grid.

use std::fmt::Write as _;
use std::path::Path;

use super::{radial_stats, Derivatives, QuadratureConfig};
use crate::error::{Error, Result};

const MAGIC: &str = "# hypermix-grid v1";

/// Piecewise Hermite tables in `u = ln β`.
///
/// `A` is quintic, matching the exact `u`-derivatives `βA'` and
/// `βA' + β²A''` at each knot. `A'` is cubic with exact slopes `βA''` and
/// `A''` cubic with finite-difference slopes, both passed through the
/// Fritsch–Carlson limiter so their monotonicity is kept between knots.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    beta: Vec<f64>,
    u: Vec<f64>,
    vals: [Vec<f64>; 3],
    slopes: [Vec<f64>; 3],
    curv: Vec<f64>,
}

impl Grid {
    pub fn build(dim: usize, beta_lo: f64, beta_hi: f64, knots: usize, quad: &QuadratureConfig) -> Result<Self> {
        if !(beta_lo.is_finite() && beta_hi.is_finite() && 0.0 < beta_lo && beta_lo < beta_hi) {
            return Err(Error::Domain(format!(
                "grid range must satisfy 0 < lo < hi, got [{beta_lo}, {beta_hi}]"
            )));
        }
        if knots < 8 {
            return Err(Error::Domain(format!("grid needs at least 8 knots, got {knots}")));
        }
        let (l0, l1) = (beta_lo.ln(), beta_hi.ln());
        let beta: Vec<f64> = (0..knots)
            .map(|i| {
                if i == 0 {
                    beta_lo
                } else if i == knots - 1 {
                    beta_hi
                } else {
                    (l0 + (l1 - l0) * i as f64 / (knots - 1) as f64).exp()
                }
            })
            .collect();
        let rows = beta
            .iter()
            .map(|&b| radial_stats(dim, b, quad).map(|d| (b, d)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(dim, rows))
    }

    fn from_rows(dim: usize, rows: Vec<(f64, Derivatives)>) -> Self {
        let beta: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let u: Vec<f64> = beta.iter().map(|b| b.ln()).collect();
        let a: Vec<f64> = rows.iter().map(|r| r.1.value).collect();
        let a1: Vec<f64> = rows.iter().map(|r| r.1.first).collect();
        let a2: Vec<f64> = rows.iter().map(|r| r.1.second).collect();
        let s0: Vec<f64> = beta.iter().zip(&a1).map(|(b, d)| b * d).collect();
        let curv: Vec<f64> = (0..beta.len()).map(|k| beta[k] * a1[k] + beta[k] * beta[k] * a2[k]).collect();
        let mut s1: Vec<f64> = beta.iter().zip(&a2).map(|(b, d)| b * d).collect();
        let mut s2 = pchip_slopes(&u, &a2);
        limit_slopes(&u, &a1, &mut s1);
        limit_slopes(&u, &a2, &mut s2);
        Grid {
            dim,
            beta,
            u,
            vals: [a, a1, a2],
            slopes: [s0, s1, s2],
            curv,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knots(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_lo(&self) -> f64 {
        self.beta[0]
    }

    pub fn beta_hi(&self) -> f64 {
        *self.beta.last().unwrap()
    }

    /// Interpolated values, or `None` outside the tabulated range.
    pub fn eval(&self, beta: f64) -> Option<Derivatives> {
        if !(beta >= self.beta_lo() && beta <= self.beta_hi()) {
            return None;
        }
        let k = self.beta.partition_point(|&b| b < beta);
        if k < self.beta.len() && self.beta[k] == beta {
            return Some(self.row(k));
        }
        let i = k - 1;
        let u = beta.ln();
        let h = self.u[i + 1] - self.u[i];
        let t = ((u - self.u[i]) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let f = |j: usize| {
            let (y, m) = (&self.vals[j], &self.slopes[j]);
            h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]
        };
        let t4 = t3 * t;
        let t5 = t4 * t;
        let (y, m, c) = (&self.vals[0], &self.slopes[0], &self.curv);
        let value = (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5) * y[i]
            + (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5) * h * m[i]
            + 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5) * h * h * c[i]
            + (10.0 * t3 - 15.0 * t4 + 6.0 * t5) * y[i + 1]
            + (-4.0 * t3 + 7.0 * t4 - 3.0 * t5) * h * m[i + 1]
            + 0.5 * (t3 - 2.0 * t4 + t5) * h * h * c[i + 1];
        Some(Derivatives {
            value,
            first: f(1),
            second: f(2),
        })
    }

    fn row(&self, k: usize) -> Derivatives {
        Derivatives {
            value: self.vals[0][k],
            first: self.vals[1][k],
            second: self.vals[2][k],
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\n# dim {}\n# beta,A,A1,A2\n", self.dim);
        for k in 0..self.beta.len() {
            let r = self.row(k);
            let _ = writeln!(s, "{},{},{},{}", self.beta[k], r.value, r.first, r.second);
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(perr(1, format!("expected header `{MAGIC}`"))),
        }
        let mut dim = None;
        let mut rows: Vec<(f64, Derivatives)> = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("dim ") {
                    dim = Some(v.trim().parse::<usize>().map_err(|e| perr(i + 1, e.to_string()))?);
                }
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(i + 1, e.to_string()))?;
            if f.len() != 4 || f.iter().any(|x| !x.is_finite()) {
                return Err(perr(i + 1, "expected four finite fields beta,A,A1,A2".into()));
            }
            if f[0] <= 0.0 || rows.last().is_some_and(|r| r.0 >= f[0]) {
                return Err(perr(i + 1, "beta values must be positive and increasing".into()));
            }
            rows.push((
                f[0],
                Derivatives {
                    value: f[1],
                    first: f[2],
                    second: f[3],
                },
            ));
        }
        let dim = dim.ok_or_else(|| perr(2, "missing `# dim N` line".into()))?;
        if dim == 0 || dim > crate::geometry::MAX_DIM {
            return Err(perr(2, format!("dimension {dim} out of range")));
        }
        if rows.len() < 2 {
            return Err(perr(text.lines().count(), "grid needs at least 2 knots".into()));
        }
        Ok(Self::from_rows(dim, rows))
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        let (d0, d1) = (delta[i - 1], delta[i]);
        if d0 * d1 > 0.0 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    m
}

/// Fritsch–Carlson: zero or shrink node slopes so each interval stays monotone.
fn limit_slopes(x: &[f64], y: &[f64], m: &mut [f64]) {
    for i in 0..x.len() - 1 {
        let d = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if d == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        if m[i] / d < 0.0 {
            m[i] = 0.0;
        }
        if m[i + 1] / d < 0.0 {
            m[i + 1] = 0.0;
        }
        let (a, b) = (m[i] / d, m[i + 1] / d);
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * d;
            m[i + 1] = tau * b * d;
        }
    }
}
