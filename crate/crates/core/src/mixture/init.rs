//! k-means++ style seeding with hyperbolic distances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{data_hull_radius, FitConfig, MixtureParams};
use crate::error::Result;
use crate::gaussian::{self, GaussianParams};
use crate::geometry::{dist_from_alpha, linner, HyperPoint, WeightedSample};
use crate::normalizer::RadialModel;

fn d2(a: &HyperPoint, b: &HyperPoint) -> f64 {
    let r = dist_from_alpha(-linner(a.coords(), b.coords()));
    r * r
}

/// Seeds `K` centres, hard-assigns every point to its nearest centre, then
/// sets each component to its cluster barycenter, the moment-matched scale,
/// and the cluster fraction floored at `1/(10K)`.
///
/// The random stream is ChaCha20 keyed by `config.seed` on stream `restart`.
pub fn initialize(data: &[HyperPoint], model: &RadialModel, config: &FitConfig, restart: usize) -> Result<MixtureParams> {
    let k = config.k;
    let n = data.len();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);

    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = data.iter().map(|x| d2(x, &data[seeds[0]])).collect();
    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        seeds.push(pick);
        for (i, x) in data.iter().enumerate() {
            nearest[i] = nearest[i].min(d2(x, &data[pick]));
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, x) in data.iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, &s) in seeds.iter().enumerate() {
            let dd = d2(x, &data[s]);
            if dd < best_d {
                best = j;
                best_d = dd;
            }
        }
        members[best].push(i);
    }

    let bx = config.scale_box;
    let floor = 1.0 / (10.0 * k as f64);
    let mut components = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for (j, idx) in members.iter().enumerate() {
        let seed_point = data[seeds[j]].clone();
        if idx.is_empty() {
            components.push(GaussianParams::new(seed_point, bx.hi)?);
            weights.push(floor);
            continue;
        }
        let pts: Vec<HyperPoint> = idx.iter().map(|&i| data[i].clone()).collect();
        let ones = vec![1.0; pts.len()];
        let sample = WeightedSample::new(&pts, &ones)?;
        let st = gaussian::barycenter_raw(&sample, seed_point, config.mm_tol, config.mm_max_steps);
        let w = pts.len() as f64;
        let scale = gaussian::solve_scale(st.objective, w, model, &bx, gaussian::scale_init(model.dim(), st.objective, w, &bx))?;
        components.push(GaussianParams::new(st.iterate, scale.beta)?);
        weights.push((w / n as f64).max(floor));
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let params = MixtureParams {
        weights,
        components,
        scale_box: bx,
        hull_radius_bound: data_hull_radius(data),
    };
    params.validate()?;
    Ok(params)
}
