//! Monte Carlo harnesses for the weighted single-component study, mixture
//! recovery, model selection and the EM/GEM comparison.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use super::{adjusted_rand, align_centers, hard_assign, misclassification, summarize};
use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianParams, ScaleBox};
use crate::geometry::{distance, HyperPoint, WeightedSample};
use crate::mixture::{self, information_criteria, FitConfig, FitReport, MixtureParams, Mode};
use crate::normalizer::RadialModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Stat {
    pub name: String,
    pub median: f64,
    pub iqr: f64,
    /// Wall-clock statistics vary between runs and are kept out of [`SimSummary::to_csv`].
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Cell coordinates such as `("regime", "mild")` and `("n", "1000")`.
    pub cell: Vec<(String, String)>,
    pub stats: Vec<Stat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub replicates: usize,
    pub seed: u64,
    pub rows: Vec<SummaryRow>,
    /// Largest single-iteration loglik decrease over every EM/GEM fit in the study.
    pub max_trace_drop: Option<f64>,
}

impl SimSummary {
    /// Looks up a statistic in the row whose cell contains every `(key, value)` pair.
    pub fn stat(&self, cell: &[(&str, &str)], name: &str) -> Option<&Stat> {
        self.rows
            .iter()
            .find(|r| cell.iter().all(|(k, v)| r.cell.iter().any(|(a, b)| a == k && b == v)))
            .and_then(|r| r.stats.iter().find(|s| s.name == name))
    }

    fn csv(&self, timing: bool) -> String {
        let mut out = String::new();
        let Some(first) = self.rows.first() else {
            return out;
        };
        let _ = writeln!(out, "# replicates {}", self.replicates);
        let _ = writeln!(out, "# seed {}", self.seed);
        let mut header: Vec<String> = first.cell.iter().map(|(k, _)| k.clone()).collect();
        for s in first.stats.iter().filter(|s| s.timing == timing) {
            header.push(format!("{}_median", s.name));
            header.push(format!("{}_iqr", s.name));
        }
        let _ = writeln!(out, "{}", header.join(","));
        for r in &self.rows {
            let mut fields: Vec<String> = r.cell.iter().map(|(_, v)| v.clone()).collect();
            for s in r.stats.iter().filter(|s| s.timing == timing) {
                fields.push(format!("{:?}", s.median));
                fields.push(format!("{:?}", s.iqr));
            }
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    /// Deterministic statistics as CSV with `#` metadata lines.
    pub fn to_csv(&self) -> String {
        self.csv(false)
    }

    /// Wall-clock statistics only.
    pub fn timing_csv(&self) -> String {
        self.csv(true)
    }
}

fn stat(name: &str, values: &[f64], timing: bool) -> Result<Stat> {
    let (median, iqr) = summarize(values)?;
    Ok(Stat {
        name: name.to_string(),
        median,
        iqr,
        timing,
    })
}

fn cell(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// ChaCha20 keyed by `seed` on a stream derived from the cell and replicate.
fn replicate_rng(seed: u64, cell: usize, replicate: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | replicate as u64);
    rng
}

fn replicate_seed(seed: u64, cell: usize, replicate: usize) -> u64 {
    replicate_rng(seed, cell, replicate).random()
}

/// Runs `f` for every replicate, on a local pool when `threads > 1`, keeping replicate order.
fn run_replicates<T: Send>(replicates: usize, threads: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if replicates == 0 {
        return Err(Error::Domain("replicates must be at least 1".into()));
    }
    let out: Vec<Result<T>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        pool.install(|| (0..replicates).into_par_iter().map(&f).collect())
    } else {
        (0..replicates).map(&f).collect()
    };
    out.into_iter().collect()
}

fn trace_drop(report: &FitReport) -> f64 {
    report
        .loglik_trace
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn fold_drop(acc: Option<f64>, d: f64) -> Option<f64> {
    Some(acc.map_or(d, |a| a.max(d)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub name: String,
    /// Gamma shape of the observation weights (rate 1, rescaled to sum `n`).
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSingleConfig {
    pub n_list: Vec<usize>,
    pub regimes: Vec<Regime>,
    pub replicates: usize,
    pub seed: u64,
    pub mu: HyperPoint,
    pub beta: f64,
    pub scale_box: ScaleBox,
    pub threads: usize,
}

impl Default for WeightedSingleConfig {
    fn default() -> Self {
        let a = 1.5f64.sinh() / 2f64.sqrt();
        WeightedSingleConfig {
            n_list: (1..=10).map(|i| 100 * i).collect(),
            regimes: vec![
                Regime {
                    name: "mild".into(),
                    shape: 5.0,
                },
                Regime {
                    name: "strong".into(),
                    shape: 0.5,
                },
            ],
            replicates: 100,
            seed: 0,
            mu: HyperPoint::from_spatial(&[a, a]).expect("finite coordinates"),
            beta: 2.0,
            scale_box: ScaleBox::default(),
            threads: 1,
        }
    }
}

/// One replicate of the weighted single-component design: draws and Gamma weights summing to `n`.
pub fn sim_weighted_single_data<R: Rng + ?Sized>(params: &GaussianParams, shape: f64, n: usize, rng: &mut R) -> Result<(Vec<HyperPoint>, Vec<f64>)> {
    let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::Domain(format!("gamma shape {shape}: {e}")))?;
    let points = gaussian::sample_with_rng(params, n, rng)?;
    let mut w: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v *= n as f64 / total;
    }
    Ok((points, w))
}

/// Weighted MLE accuracy per `(regime, n)` cell.
pub fn sim_weighted_single(config: &WeightedSingleConfig, model: &RadialModel) -> Result<SimSummary> {
    let truth = GaussianParams::new(config.mu.clone(), config.beta)?;
    let mut rows = Vec::new();
    let mut cell_id = 0;
    for regime in &config.regimes {
        for &n in &config.n_list {
            let id = cell_id;
            cell_id += 1;
            let reps = run_replicates(config.replicates, config.threads, |r| {
                let mut rng = replicate_rng(config.seed, id, r);
                let (points, w) = sim_weighted_single_data(&truth, regime.shape, n, &mut rng)?;
                let sample = WeightedSample::new(&points, &w)?;
                let start = Instant::now();
                let (est, diag) = gaussian::weighted_mle(&sample, model, &config.scale_box)?;
                let t = start.elapsed().as_secs_f64();
                Ok([
                    distance(&est.mu, &truth.mu)?,
                    (est.beta - truth.beta).abs() / truth.beta,
                    diag.score_residual,
                    t,
                ])
            })?;
            let col = |j: usize| reps.iter().map(|v| v[j]).collect::<Vec<_>>();
            rows.push(SummaryRow {
                cell: cell(&[("regime", regime.name.clone()), ("n", n.to_string())]),
                stats: vec![
                    stat("location_error", &col(0), false)?,
                    stat("scale_error", &col(1), false)?,
                    stat("score_residual", &col(2), false)?,
                    stat("runtime", &col(3), true)?,
                ],
            });
        }
    }
    Ok(SimSummary {
        replicates: config.replicates,
        seed: config.seed,
        rows,
        max_trace_drop: None,
    })
}

/// Four centres at distance `rho` from the origin, one per quadrant of the
/// first two spatial axes, zero-padded to `dim`.
pub fn mixture_centers(dim: usize, rho: f64) -> Result<Vec<HyperPoint>> {
    if dim < 2 {
        return Err(Error::Domain("the four-centre design needs d >= 2".into()));
    }
    let a = rho.sinh() / 2f64.sqrt();
    [[a, a], [-a, a], [-a, -a], [a, -a]]
        .iter()
        .map(|c| {
            let mut u = vec![0.0; dim];
            u[..2].copy_from_slice(c);
            HyperPoint::from_spatial(&u)
        })
        .collect()
}

/// Draws `n` labelled points from an equal-weight mixture of the given components.
pub fn sim_mixture_data<R: Rng + ?Sized>(components: &[GaussianParams], n: usize, rng: &mut R) -> Result<(Vec<HyperPoint>, Vec<usize>)> {
    if components.is_empty() || n == 0 {
        return Err(Error::Domain("need at least one component and one draw".into()));
    }
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(0..components.len());
        points.extend(gaussian::sample_with_rng(&components[k], 1, rng)?);
        labels.push(k);
    }
    Ok((points, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSimConfig {
    pub n_list: Vec<usize>,
    pub dim: usize,
    pub rho: f64,
    pub beta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub mode: Mode,
    pub inner_l: usize,
    pub restarts: usize,
    pub threads: usize,
}

impl Default for MixtureSimConfig {
    fn default() -> Self {
        MixtureSimConfig {
            n_list: vec![100, 250, 500],
            dim: 2,
            rho: 2.0,
            beta: 1.5,
            replicates: 10,
            seed: 0,
            mode: Mode::Em,
            inner_l: 1,
            restarts: 5,
            threads: 1,
        }
    }
}

impl MixtureSimConfig {
    fn truth(&self) -> Result<Vec<GaussianParams>> {
        mixture_centers(self.dim, self.rho)?
            .into_iter()
            .map(|m| GaussianParams::new(m, self.beta))
            .collect()
    }

    fn fit_config(&self, k: usize, seed: u64) -> FitConfig {
        FitConfig {
            mode: self.mode,
            inner_l: self.inner_l,
            restarts: self.restarts,
            seed,
            ..FitConfig::new(k)
        }
    }
}

struct Recovery {
    center_error: f64,
    scale_error: f64,
    weight_error: f64,
    ari: f64,
    misclassification: f64,
}

fn recovery(truth: &[GaussianParams], labels: &[usize], est: &MixtureParams, resp: &mixture::Responsibilities) -> Result<Recovery> {
    let tc: Vec<HyperPoint> = truth.iter().map(|c| c.mu.clone()).collect();
    let ec: Vec<HyperPoint> = est.components.iter().map(|c| c.mu.clone()).collect();
    let (perm, center_error) = align_centers(&tc, &ec)?;
    let k = truth.len() as f64;
    let scale_error = truth
        .iter()
        .zip(&perm)
        .map(|(t, &j)| (est.components[j].beta - t.beta).abs() / t.beta)
        .sum::<f64>()
        / k;
    let weight_error = perm.iter().map(|&j| (est.weights[j] - 1.0 / k).abs()).sum();
    let pred = hard_assign(resp);
    Ok(Recovery {
        center_error,
        scale_error,
        weight_error,
        ari: adjusted_rand(labels, &pred)?,
        misclassification: misclassification(labels, &pred)?,
    })
}

/// Mixture recovery with known `K = 4` per sample size.
pub fn sim_mixture(config: &MixtureSimConfig, model: &RadialModel) -> Result<SimSummary> {
    let truth = config.truth()?;
    let mut rows = Vec::new();
    let mut worst = None;
    for (id, &n) in config.n_list.iter().enumerate() {
        let reps = run_replicates(config.replicates, config.threads, |r| {
            let mut rng = replicate_rng(config.seed, id, r);
            let (data, labels) = sim_mixture_data(&truth, n, &mut rng)?;
            let fc = config.fit_config(truth.len(), replicate_seed(config.seed, id, r));
            let start = Instant::now();
            let rep = mixture::fit(&data, model, &fc)?;
            let t = start.elapsed().as_secs_f64();
            let m = recovery(&truth, &labels, &rep.final_params, &rep.responsibilities)?;
            Ok(([m.center_error, m.scale_error, m.weight_error, m.ari, m.misclassification, t], trace_drop(&rep)))
        })?;
        for (_, d) in &reps {
            worst = fold_drop(worst, *d);
        }
        let col = |j: usize| reps.iter().map(|(v, _)| v[j]).collect::<Vec<_>>();
        rows.push(SummaryRow {
            cell: cell(&[("n", n.to_string())]),
            stats: vec![
                stat("center_error", &col(0), false)?,
                stat("scale_error", &col(1), false)?,
                stat("weight_error", &col(2), false)?,
                stat("ari", &col(3), false)?,
                stat("misclassification", &col(4), false)?,
                stat("runtime", &col(5), true)?,
            ],
        });
    }
    Ok(SimSummary {
        replicates: config.replicates,
        seed: config.seed,
        rows,
        max_trace_drop: worst,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub n_list: Vec<usize>,
    pub ks: Vec<usize>,
    pub mixture: MixtureSimConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n_list: vec![100, 250, 500],
            ks: (2..=6).collect(),
            mixture: MixtureSimConfig {
                replicates: 5,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionChoice {
    pub n: usize,
    pub replicate: usize,
    pub aic: usize,
    pub bic: usize,
    pub hqic: usize,
    /// BIC at each candidate `K`.
    pub bic_path: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub ks: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub choices: Vec<SelectionChoice>,
    pub max_trace_drop: Option<f64>,
}

impl SelectionOutcome {
    /// Fraction of replicates at sample size `n` where `criterion` picked `k`.
    pub fn frequency(&self, n: usize, criterion: &str, k: usize) -> f64 {
        let cells: Vec<&SelectionChoice> = self.choices.iter().filter(|c| c.n == n).collect();
        let hits = cells
            .iter()
            .filter(|c| match criterion {
                "aic" => c.aic == k,
                "bic" => c.bic == k,
                "hqic" => c.hqic == k,
                _ => false,
            })
            .count();
        hits as f64 / cells.len().max(1) as f64
    }

    /// Selection frequencies: one row per `(n, criterion)`, one column per candidate `K`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# replicates {}\n# seed {}\nn,criterion", self.replicates, self.seed);
        for k in &self.ks {
            let _ = write!(out, ",K{k}");
        }
        out.push('\n');
        let mut ns: Vec<usize> = self.choices.iter().map(|c| c.n).collect();
        ns.dedup();
        for n in ns {
            for crit in ["aic", "bic", "hqic"] {
                let _ = write!(out, "{n},{crit}");
                for &k in &self.ks {
                    let _ = write!(out, ",{:?}", self.frequency(n, crit, k));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Long format `n,replicate,K,bic`.
    pub fn bic_paths_csv(&self) -> String {
        let mut out = String::from("n,replicate,K,bic\n");
        for c in &self.choices {
            for (k, b) in self.ks.iter().zip(&c.bic_path) {
                let _ = writeln!(out, "{},{},{},{:?}", c.n, c.replicate, k, b);
            }
        }
        out
    }
}

/// Information-criterion selection of `K` on data from the four-component design.
pub fn model_selection(config: &SelectionConfig, model: &RadialModel) -> Result<SelectionOutcome> {
    if config.ks.is_empty() {
        return Err(Error::Domain("K range is empty".into()));
    }
    let mc = &config.mixture;
    let truth = mc.truth()?;
    let mut choices = Vec::new();
    let mut worst = None;
    for (id, &n) in config.n_list.iter().enumerate() {
        let reps = run_replicates(mc.replicates, mc.threads, |r| {
            let mut rng = replicate_rng(mc.seed, id, r);
            let (data, _) = sim_mixture_data(&truth, n, &mut rng)?;
            let seed = replicate_seed(mc.seed, id, r);
            let mut crit = Vec::with_capacity(config.ks.len());
            let mut drop = f64::NEG_INFINITY;
            for &k in &config.ks {
                let rep = mixture::fit(&data, model, &mc.fit_config(k, seed))?;
                drop = drop.max(trace_drop(&rep));
                crit.push(information_criteria(rep.loglik(), n, mc.dim, k)?);
            }
            let argmin = |f: &dyn Fn(usize) -> f64| {
                (0..crit.len()).fold(0, |b, i| if f(i) < f(b) { i } else { b })
            };
            let choice = SelectionChoice {
                n,
                replicate: r,
                aic: config.ks[argmin(&|i| crit[i].aic)],
                bic: config.ks[argmin(&|i| crit[i].bic)],
                hqic: config.ks[argmin(&|i| crit[i].hqic)],
                bic_path: crit.iter().map(|c| c.bic).collect(),
            };
            Ok((choice, drop))
        })?;
        for (c, d) in reps {
            worst = fold_drop(worst, d);
            choices.push(c);
        }
    }
    Ok(SelectionOutcome {
        ks: config.ks.clone(),
        replicates: mc.replicates,
        seed: mc.seed,
        choices,
        max_trace_drop: worst,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmGemConfig {
    pub n: usize,
    /// Inner budgets of the GEM variants; exact EM always runs alongside.
    pub inner_ls: Vec<usize>,
    pub mixture: MixtureSimConfig,
}

impl Default for EmGemConfig {
    fn default() -> Self {
        EmGemConfig {
            n: 1000,
            inner_ls: vec![1, 3, 5],
            mixture: MixtureSimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    /// `em` or `gem-L`.
    pub method: String,
    pub replicate: usize,
    pub loglik: f64,
    pub inner_steps: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub center_error: f64,
    pub scale_error: f64,
    pub ari: f64,
    pub loglik_trace: Vec<f64>,
    pub time_trace: Vec<f64>,
}

impl MethodRun {
    /// Long format `iteration,elapsed,loglik`.
    pub fn trace_csv(&self) -> String {
        let mut out = format!("# method {}\n# replicate {}\niteration,elapsed,loglik\n", self.method, self.replicate);
        for (i, (t, l)) in self.time_trace.iter().zip(&self.loglik_trace).enumerate() {
            let _ = writeln!(out, "{i},{t:?},{l:?}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmGemOutcome {
    pub summary: SimSummary,
    pub runs: Vec<MethodRun>,
}

impl EmGemOutcome {
    pub fn runs_for(&self, method: &str) -> Vec<&MethodRun> {
        self.runs.iter().filter(|r| r.method == method).collect()
    }
}

/// Exact EM against GEM-L from one shared initialization per replicate.
///
/// The shared start is the candidate with the highest initial loglik among
/// `restarts` seeded initializations.
pub fn em_vs_gem(config: &EmGemConfig, model: &RadialModel) -> Result<EmGemOutcome> {
    let mc = &config.mixture;
    let truth = mc.truth()?;
    let k = truth.len();
    let mut methods = vec![("em".to_string(), Mode::Em, 1)];
    for &l in &config.inner_ls {
        methods.push((format!("gem-{l}"), Mode::Gem, l));
    }
    let reps = run_replicates(mc.replicates, mc.threads, |r| {
        let mut rng = replicate_rng(mc.seed, 0, r);
        let (data, labels) = sim_mixture_data(&truth, config.n, &mut rng)?;
        let base = mc.fit_config(k, replicate_seed(mc.seed, 0, r));
        let mut init: Option<(MixtureParams, f64)> = None;
        for restart in 0..base.restarts {
            let p = mixture::initialize(&data, model, &base, restart)?;
            let (_, ll) = mixture::responsibilities(&p, model, &data)?;
            if init.as_ref().is_none_or(|(_, b)| ll > *b) {
                init = Some((p, ll));
            }
        }
        let init = init.expect("restarts >= 1").0;
        let mut runs = Vec::with_capacity(methods.len());
        for (name, mode, l) in &methods {
            let fc = FitConfig {
                mode: *mode,
                inner_l: *l,
                restarts: 1,
                threads: 1,
                ..base.clone()
            };
            let rep = mixture::fit_from_init(&data, model, &fc, init.clone())?;
            let m = recovery(&truth, &labels, &rep.final_params, &rep.responsibilities)?;
            runs.push(MethodRun {
                method: name.clone(),
                replicate: r,
                loglik: rep.loglik(),
                inner_steps: rep.inner_mm_steps_total,
                outer_iterations: rep.outer_iterations,
                converged: rep.converged,
                wall_time: rep.wall_time,
                center_error: m.center_error,
                scale_error: m.scale_error,
                ari: m.ari,
                loglik_trace: rep.loglik_trace,
                time_trace: rep.time_trace,
            });
        }
        Ok(runs)
    })?;
    let runs: Vec<MethodRun> = reps.into_iter().flatten().collect();
    let mut worst = None;
    for run in &runs {
        let d = run.loglik_trace.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        worst = fold_drop(worst, d);
    }
    let mut rows = Vec::new();
    for (name, _, _) in &methods {
        let mr: Vec<&MethodRun> = runs.iter().filter(|r| &r.method == name).collect();
        let col = |f: &dyn Fn(&MethodRun) -> f64| mr.iter().map(|r| f(r)).collect::<Vec<_>>();
        rows.push(SummaryRow {
            cell: cell(&[("method", name.clone())]),
            stats: vec![
                stat("center_error", &col(&|r| r.center_error), false)?,
                stat("scale_error", &col(&|r| r.scale_error), false)?,
                stat("ari", &col(&|r| r.ari), false)?,
                stat("loglik", &col(&|r| r.loglik), false)?,
                stat("outer_iterations", &col(&|r| r.outer_iterations as f64), false)?,
                stat("inner_steps", &col(&|r| r.inner_steps as f64), false)?,
                stat("converged", &col(&|r| if r.converged { 1.0 } else { 0.0 }), false)?,
                stat("runtime", &col(&|r| r.wall_time), true)?,
            ],
        });
    }
    Ok(EmGemOutcome {
        summary: SimSummary {
            replicates: mc.replicates,
            seed: mc.seed,
            rows,
            max_trace_drop: worst,
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RadialModel {
        RadialModel::grid(2, 1e-3, 50.0, 256).unwrap()
    }

    #[test]
    fn centers_sit_at_rho() {
        let cs = mixture_centers(3, 2.0).unwrap();
        for c in &cs {
            assert!((distance(c, &HyperPoint::origin(3)).unwrap() - 2.0).abs() < 1e-12);
            assert_eq!(c.coords()[2], 0.0);
        }
        assert!(mixture_centers(1, 2.0).is_err());
    }

    #[test]
    fn gamma_weights_sum_to_n() {
        let p = GaussianParams::new(HyperPoint::origin(2), 2.0).unwrap();
        let (x, w) = sim_weighted_single_data(&p, 0.5, 50, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert_eq!(x.len(), 50);
        assert!((w.iter().sum::<f64>() - 50.0).abs() < 1e-10);
        assert!(w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn weighted_single_is_deterministic() {
        let cfg = WeightedSingleConfig {
            n_list: vec![50],
            replicates: 3,
            seed: 9,
            ..Default::default()
        };
        let a = sim_weighted_single(&cfg, &model()).unwrap();
        let b = sim_weighted_single(&cfg, &model()).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 2);
        let threaded = sim_weighted_single(&WeightedSingleConfig { threads: 3, ..cfg }, &model()).unwrap();
        assert_eq!(a.to_csv(), threaded.to_csv());
        assert!(a.stat(&[("regime", "mild"), ("n", "50")], "score_residual").unwrap().median <= 1e-9);
        assert!(!a.to_csv().contains("runtime"));
        assert!(a.timing_csv().contains("runtime_median"));
    }

    #[test]
    fn single_replicate_has_zero_iqr() {
        let cfg = MixtureSimConfig {
            n_list: vec![120],
            replicates: 1,
            restarts: 2,
            ..Default::default()
        };
        let s = sim_mixture(&cfg, &model()).unwrap();
        for st in &s.rows[0].stats {
            assert_eq!(st.iqr, 0.0);
        }
        assert!(s.max_trace_drop.unwrap() <= 1e-8);
    }

    #[test]
    fn em_gem_share_initialization() {
        let cfg = EmGemConfig {
            n: 200,
            inner_ls: vec![1],
            mixture: MixtureSimConfig {
                replicates: 2,
                restarts: 2,
                ..Default::default()
            },
        };
        let out = em_vs_gem(&cfg, &model()).unwrap();
        assert_eq!(out.runs.len(), 4);
        for r in 0..2 {
            let em = &out.runs[2 * r];
            let gem = &out.runs[2 * r + 1];
            assert_eq!(em.loglik_trace[0], gem.loglik_trace[0]);
            assert!(((em.loglik - gem.loglik) / em.loglik).abs() < 1e-4);
        }
        assert!(out.runs[0].trace_csv().starts_with("# method em"));
    }

    #[test]
    fn selection_frequencies_sum_to_one() {
        let cfg = SelectionConfig {
            n_list: vec![150],
            ks: vec![3, 4, 5],
            mixture: MixtureSimConfig {
                replicates: 2,
                restarts: 2,
                ..Default::default()
            },
        };
        let out = model_selection(&cfg, &model()).unwrap();
        for crit in ["aic", "bic", "hqic"] {
            let s: f64 = cfg.ks.iter().map(|&k| out.frequency(150, crit, k)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(out.to_csv().lines().count(), 3 + 3);
        assert_eq!(out.bic_paths_csv().lines().count(), 1 + 2 * 3);
    }
}
