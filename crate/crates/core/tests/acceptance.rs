//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use hypermix::eval::{em_vs_gem, model_selection, sim_mixture, sim_weighted_single, EmGemConfig, MixtureSimConfig, SelectionConfig, WeightedSingleConfig};
use hypermix::gaussian::{mm_step, sample, weighted_barycenter, GaussianParams};
use hypermix::geometry::{
    distance, exp_map, frechet_gradient, frechet_value, from_poincare, geodesic_point, log_map, lorentz_inner, project_tangent, score_residual,
    to_poincare, HyperPoint, WeightedSample,
};
use hypermix::mixture::demonstrate_singularity;
use hypermix::normalizer::{z_closed_form, z_quadrature};
use hypermix::RadialModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SEED: u64 = 20240607;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn model() -> RadialModel {
    RadialModel::grid(2, 1e-3, 50.0, 256).expect("grid")
}

fn random_point(rng: &mut ChaCha20Rng, d: usize, spread: f64) -> HyperPoint {
    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
    HyperPoint::from_spatial(&u).unwrap()
}

fn random_sample(rng: &mut ChaCha20Rng, d: usize, n: usize) -> (Vec<HyperPoint>, Vec<f64>) {
    let pts = (0..n).map(|_| random_point(rng, d, 3.0)).collect();
    let w = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    (pts, w)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for d in 2..=10 {
        for i in 0..40 {
            let beta = 0.1 * (500f64).powf(i as f64 / 39.0);
            match (z_closed_form(d, beta), z_quadrature(d, beta)) {
                (Ok(c), Ok(q)) => worst = worst.max((c - q).abs() / q),
                _ => failures += 1,
            }
        }
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst <= 1e-9 && t < 5.0,
        format!("max rel diff {worst:.2e}, {failures} evaluation errors, {t:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let v = z_quadrature(2, 1e4).unwrap() * 1e4 / std::f64::consts::PI;
    outcome((0.99..=1.01).contains(&v), format!("Z_2(1e4)*1e4/pi = {v:.6}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let mut max_rise: f64 = f64::NEG_INFINITY;
    let mut max_res_ratio: f64 = 0.0;
    let mut max_disagree: f64 = 0.0;
    let mut ok = true;
    for case in 0..200 {
        let d = [2, 3, 5][case % 3];
        let n = rng.random_range(1..=50);
        let (pts, w) = random_sample(&mut rng, d, n);
        let s = WeightedSample::new(&pts, &w).unwrap();
        let total: f64 = w.iter().sum();
        let mut mu = random_point(&mut rng, d, 5.0);
        let mut f = frechet_value(&s, &mu).unwrap();
        for _ in 0..30 {
            mu = mm_step(&s, &mu).unwrap();
            let g = frechet_value(&s, &mu).unwrap();
            max_rise = max_rise.max(g - f);
            f = g;
        }
        let a = weighted_barycenter(&s, &random_point(&mut rng, d, 5.0), 1e-10, 10_000).unwrap();
        let b = weighted_barycenter(&s, &random_point(&mut rng, d, 5.0), 1e-10, 10_000).unwrap();
        ok &= a.converged && b.converged;
        max_res_ratio = max_res_ratio.max(score_residual(&s, &a.iterate).unwrap() / total);
        max_disagree = max_disagree.max(distance(&a.iterate, &b.iterate).unwrap());
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        ok && max_rise <= 1e-12 && max_res_ratio <= 1e-8 && max_disagree <= 1e-7 && t < 30.0,
        format!("max step rise {max_rise:.1e}, max residual/W {max_res_ratio:.1e}, max init disagreement {max_disagree:.1e}, {t:.2}s"),
    )
}

fn criterion_4(m: &RadialModel) -> Outcome {
    let start = Instant::now();
    let cfg = WeightedSingleConfig {
        seed: SEED,
        ..Default::default()
    };
    let s = sim_weighted_single(&cfg, m).unwrap();
    let t = start.elapsed().as_secs_f64();
    let mild = |name| s.stat(&[("regime", "mild"), ("n", "1000")], name).unwrap().median;
    let (loc, scale, res) = (mild("location_error"), mild("scale_error"), mild("score_residual"));
    let mut ordered = true;
    let mut worst_res: f64 = 0.0;
    for &n in &cfg.n_list {
        let ns = n.to_string();
        let get = |reg, name| s.stat(&[("regime", reg), ("n", ns.as_str())], name).unwrap().median;
        ordered &= get("strong", "location_error") > get("mild", "location_error");
        worst_res = worst_res.max(get("strong", "score_residual")).max(get("mild", "score_residual"));
    }
    outcome(
        (0.010..=0.030).contains(&loc) && (0.012..=0.040).contains(&scale) && res <= 1e-9 && ordered && t < 180.0,
        format!(
            "mild n=1000: location {loc:.4}, scale {scale:.4}, residual {res:.1e}; strong > mild at every n: {ordered}; worst cell residual {worst_res:.1e}; {t:.1}s"
        ),
    )
}

fn criterion_5(m: &RadialModel, worst: &mut f64) -> Outcome {
    let start = Instant::now();
    let cfg = MixtureSimConfig {
        n_list: vec![500],
        seed: SEED,
        ..Default::default()
    };
    let s = sim_mixture(&cfg, m).unwrap();
    let t = start.elapsed().as_secs_f64();
    *worst = worst.max(s.max_trace_drop.unwrap());
    let get = |name| s.stat(&[("n", "500")], name).unwrap().median;
    let (ari, mis, ce) = (get("ari"), get("misclassification"), get("center_error"));
    outcome(
        ari >= 0.98 && mis <= 0.01 && ce <= 0.09 && t < 300.0,
        format!("n=500: ARI {ari:.4}, misclassification {mis:.4}, center error {ce:.4}; {t:.1}s"),
    )
}

fn criterion_6(m: &RadialModel, worst: &mut f64) -> Outcome {
    let start = Instant::now();
    let cfg = SelectionConfig {
        mixture: MixtureSimConfig {
            replicates: 5,
            seed: SEED,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = model_selection(&cfg, m).unwrap();
    let t = start.elapsed().as_secs_f64();
    *worst = worst.max(out.max_trace_drop.unwrap());
    let bic: Vec<f64> = cfg.n_list.iter().map(|&n| out.frequency(n, "bic", 4)).collect();
    let aic_under = out.choices.iter().filter(|c| c.aic < 4).count();
    outcome(
        bic.iter().all(|&f| f >= 0.8) && aic_under == 0,
        format!("BIC K=4 frequency per n {bic:?}; AIC picks below 4: {aic_under}; {t:.1}s"),
    )
}

fn criterion_7(m: &RadialModel, worst: &mut f64) -> Outcome {
    let start = Instant::now();
    let cfg = EmGemConfig {
        mixture: MixtureSimConfig {
            seed: SEED,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = em_vs_gem(&cfg, m).unwrap();
    let t = start.elapsed().as_secs_f64();
    *worst = worst.max(out.summary.max_trace_drop.unwrap());
    let em = out.runs_for("em");
    let gem = out.runs_for("gem-1");
    let max_rel = em
        .iter()
        .zip(&gem)
        .map(|(e, g)| ((g.loglik - e.loglik) / e.loglik).abs())
        .fold(0.0, f64::max);
    let em_steps: usize = em.iter().map(|r| r.inner_steps).sum();
    let gem_steps: usize = gem.iter().map(|r| r.inner_steps).sum();
    let step_ratio = gem_steps as f64 / em_steps as f64;
    let median = |v: Vec<f64>| hypermix::eval::summarize(&v).unwrap().0;
    let time_ratio = median(gem.iter().map(|r| r.wall_time).collect()) / median(em.iter().map(|r| r.wall_time).collect());
    outcome(
        max_rel <= 1e-4 && step_ratio <= 0.05 && time_ratio <= 0.20,
        format!(
            "max rel loglik gap {max_rel:.1e}; inner steps GEM-1/EM {gem_steps}/{em_steps} = {step_ratio:.3}; median time ratio {time_ratio:.3}; {t:.1}s"
        ),
    )
}

fn criterion_8(worst: f64) -> Outcome {
    outcome(worst <= 1e-8, format!("largest loglik decrease across all fits {worst:.1e}"))
}

fn criterion_9(m: &RadialModel) -> Outcome {
    let data = sample(&GaussianParams::new(HyperPoint::origin(2), 1.0).unwrap(), 100, SEED).unwrap();
    let ll = demonstrate_singularity(&data, m, &[1e2, 1e3, 1e4], f64::INFINITY).unwrap();
    let incs: Vec<f64> = ll.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let ok = incs.iter().all(|&i| i > 0.0 && (i / 10f64.ln() - 1.0).abs() <= 0.2);
    outcome(ok, format!("per-decade increments {incs:.4?} vs log 10 = {:.4}", 10f64.ln()))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(SEED ^ 10);
    let cases = 500;
    let (mut e_exp, mut e_conv, mut e_poinc, mut e_grad) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for case in 0..cases {
        let d = 2 + case % 4;
        let mu = random_point(&mut rng, d, 3.0);
        let x = random_point(&mut rng, d, 3.0);
        let v = log_map(&mu, &x).unwrap();
        let y = exp_map(&mu, &v).unwrap();
        let scale = x.coords().iter().fold(1.0f64, |a, c| a.max(c.abs()));
        e_exp = e_exp.max(x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);

        let back = from_poincare(&to_poincare(&x)).unwrap();
        e_poinc = e_poinc.max(x.coords().iter().zip(back.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);

        let (pts, w) = random_sample(&mut rng, d, 1 + case % 20);
        let s = WeightedSample::new(&pts, &w).unwrap();
        let total: f64 = w.iter().sum();
        let (g0, g1) = (random_point(&mut rng, d, 2.0), random_point(&mut rng, d, 2.0));
        let (f0, f1) = (frechet_value(&s, &g0).unwrap(), frechet_value(&s, &g1).unwrap());
        let d01 = distance(&g0, &g1).unwrap();
        for i in 1..=9 {
            let t = i as f64 / 10.0;
            let ft = frechet_value(&s, &geodesic_point(&g0, &g1, t).unwrap()).unwrap();
            let bound = (1.0 - t) * f0 + t * f1 - total * t * (1.0 - t) * d01 * d01;
            e_conv = e_conv.max(ft - bound);
        }

        let dir: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = project_tangent(&mu, &dir).unwrap();
        let u = u.scaled(1.0 / u.norm());
        let grad = frechet_gradient(&s, &mu).unwrap();
        let analytic = lorentz_inner(&grad.vec, &u.vec).unwrap();
        let h = 1e-5;
        let fp = frechet_value(&s, &exp_map(&mu, &u.scaled(h)).unwrap()).unwrap();
        let fm = frechet_value(&s, &exp_map(&mu, &u.scaled(-h)).unwrap()).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let norm = grad.norm().max(1e-300);
        e_grad = e_grad.max((fd - analytic).abs() / norm);
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        e_exp <= 1e-9 && e_conv <= 1e-8 && e_poinc <= 1e-10 && e_grad <= 1e-5 && t < 20.0,
        format!(
            "{cases} cases: exp/log {e_exp:.1e}, convexity excess {e_conv:.1e}, Poincare {e_poinc:.1e}, gradient rel {e_grad:.1e}; {t:.2}s"
        ),
    )
}

fn main() -> ExitCode {
    let m = model();
    let mut worst = f64::NEG_INFINITY;
    let results = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(&m),
        criterion_5(&m, &mut worst),
        criterion_6(&m, &mut worst),
        criterion_7(&m, &mut worst),
        criterion_8(worst),
        criterion_9(&m),
        criterion_10(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {:>2}: {} ({})", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} passed, {} failed", results.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
