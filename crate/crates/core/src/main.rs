use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use hypermix::eval::{self, EmGemConfig, MixtureSimConfig, SelectionConfig, WeightedSingleConfig};
use hypermix::gaussian::{self, GaussianParams, ScaleBox};
use hypermix::geometry::{distance, poincare_distance, to_poincare, HyperPoint};
use hypermix::io::{self, load_dataset, points_csv, write_atomic, Format, MixtureSpec, ModelFile};
use hypermix::mixture::{self, information_criteria, select_k, FitConfig, Mode};
use hypermix::{Error, RadialModel, Result};

const GRID_KNOTS: usize = 256;

#[derive(Parser)]
#[command(name = "hypermix", version, about = "Riemannian Gaussian mixtures on the hyperboloid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a K-component mixture and write a JSON model file.
    Fit(FitCmd),
    /// Fit a range of K and tabulate AIC, BIC and HQIC.
    Select(SelectCmd),
    /// Draw from a single Gaussian or a mixture spec.
    Sample(SampleCmd),
    /// Run a simulation study and write summary CSVs.
    Simulate(SimulateCmd),
    /// Convert between hyperboloid and Poincaré coordinates.
    Convert(ConvertCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordFormat {
    Hyperboloid,
    Poincare,
}

impl From<CoordFormat> for Format {
    fn from(f: CoordFormat) -> Self {
        match f {
            CoordFormat::Hyperboloid => Format::Hyperboloid,
            CoordFormat::Poincare => Format::Poincare,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMode {
    Em,
    Gem,
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV file.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "hyperboloid")]
    format: CoordFormat,
    /// 1-based column holding integer labels, excluded from the coordinates.
    #[arg(long)]
    label_column: Option<usize>,
}

impl InputArgs {
    fn load(&self) -> Result<io::Dataset> {
        let col = match self.label_column {
            Some(0) => return Err(Error::Domain("--label-column is 1-based".into())),
            c => c.map(|c| c - 1),
        };
        load_dataset(&self.input, self.format.into(), col)
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "em")]
    mode: FitMode,
    /// MM steps per component per iteration in GEM mode.
    #[arg(long, default_value_t = 1)]
    inner_l: usize,
    #[arg(long, default_value_t = 1e-3)]
    beta_lo: f64,
    #[arg(long, default_value_t = 50.0)]
    beta_hi: f64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative log-likelihood change that stops the outer loop.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Normalizer grid cache file; built and written when missing or too narrow.
    #[arg(long)]
    grid_cache: Option<PathBuf>,
}

impl FitArgs {
    fn config(&self, k: usize) -> Result<FitConfig> {
        let cfg = FitConfig {
            k,
            mode: match self.mode {
                FitMode::Em => Mode::Em,
                FitMode::Gem => Mode::Gem,
            },
            inner_l: self.inner_l,
            outer_tol: self.tol,
            max_outer: self.max_iter,
            restarts: self.restarts,
            seed: self.seed,
            scale_box: ScaleBox::new(self.beta_lo, self.beta_hi)?,
            threads: self.threads.max(1),
            ..FitConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn model(&self, dim: usize) -> Result<RadialModel> {
        radial_model(dim, self.beta_lo, self.beta_hi, self.grid_cache.as_deref())
    }
}

fn radial_model(dim: usize, lo: f64, hi: f64, cache: Option<&Path>) -> Result<RadialModel> {
    match cache {
        Some(p) => RadialModel::cached_grid(p, dim, lo, hi, GRID_KNOTS),
        None => RadialModel::grid(dim, lo, hi, GRID_KNOTS),
    }
}

#[derive(Args)]
struct FitCmd {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    fit: FitArgs,
    /// Model file (JSON). Timing goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    /// Optional responsibilities CSV.
    #[arg(long)]
    resp_out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectCmd {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k_min: usize,
    #[arg(long)]
    k_max: usize,
    #[command(flatten)]
    fit: FitArgs,
    /// CSV output; the table is printed to standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleCmd {
    /// Sample one Gaussian given by --mu and --beta.
    #[arg(long, conflicts_with = "mixture_spec")]
    single: bool,
    /// Ambient hyperboloid coordinates of the location, comma separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    beta: Option<f64>,
    /// Manifold dimension when --mu is omitted.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// JSON file with `weights`, `locations` and `betas` (a model file also works).
    #[arg(long)]
    mixture_spec: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "hyperboloid")]
    format: CoordFormat,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    WeightedSingle,
    MixtureRecovery,
    ModelSelection,
    EmVsGem,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long, value_enum)]
    study: Study,
    /// Defaults: 100 for weighted-single, 10 for mixture-recovery and em-vs-gem, 5 for model-selection.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Sample sizes, comma separated, overriding the study default.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Restarts per mixture fit.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, value_enum, default_value = "em")]
    mode: FitMode,
    #[arg(long, default_value_t = 1)]
    inner_l: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    grid_cache: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertCmd {
    input: PathBuf,
    #[arg(long, value_enum)]
    to: CoordFormat,
    /// 1-based label column carried through to the output.
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Fit(c) => run_fit(c),
        Command::Select(c) => run_select(c),
        Command::Sample(c) => run_sample(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Convert(c) => run_convert(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Returns whether the fit converged.
fn run_fit(c: FitCmd) -> Result<bool> {
    let data = c.input.load()?;
    let cfg = c.fit.config(c.k)?;
    let model = c.fit.model(data.dim())?;
    let rep = mixture::fit(&data.points, &model, &cfg)?;
    let n = data.points.len();
    let crit = information_criteria(rep.loglik(), n, data.dim(), c.k).ok();
    let mf = ModelFile::from_fit(&rep, &cfg, n, crit);
    mf.save(&c.out)?;
    if let Some(p) = &c.resp_out {
        let labels = eval::hard_assign(&rep.responsibilities);
        write_text(p, &io::responsibilities_csv(&rep.responsibilities, &labels))?;
    }
    let meta = json!({
        "wall_time": rep.wall_time,
        "time_trace": rep.time_trace,
        "loglik_trace": rep.loglik_trace,
        "threads": cfg.threads,
    });
    write_text(&meta_path(&c.out), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    println!("loglik {}", rep.loglik());
    if let Some(cr) = crit {
        println!("AIC {}\nBIC {}\nHQIC {}", cr.aic, cr.bic, cr.hqic);
    }
    println!("iterations {}\nconverged {}", rep.outer_iterations, rep.converged);
    Ok(rep.converged)
}

fn run_select(c: SelectCmd) -> Result<bool> {
    if c.k_min == 0 || c.k_min > c.k_max {
        return Err(Error::Domain(format!("invalid K range {}..={}", c.k_min, c.k_max)));
    }
    let data = c.input.load()?;
    let cfg = c.fit.config(c.k_min)?;
    let model = c.fit.model(data.dim())?;
    let ks: Vec<usize> = (c.k_min..=c.k_max).collect();
    let rows = select_k(&data.points, &model, &ks, &cfg)?;
    let mut out = String::from("K,loglik,AIC,BIC,HQIC,aic_best,bic_best,hqic_best\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k, r.loglik, r.criteria.aic, r.criteria.bic, r.criteria.hqic, r.aic_best, r.bic_best, r.hqic_best
        ));
    }
    match &c.out {
        Some(p) => write_text(p, &out)?,
        None => print!("{out}"),
    }
    Ok(rows.iter().all(|r| r.converged))
}

fn run_sample(c: SampleCmd) -> Result<bool> {
    let mut rng = ChaCha20Rng::seed_from_u64(c.seed);
    let (points, labels) = match &c.mixture_spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: MixtureSpec = serde_json::from_str(&text)?;
            let (weights, comps) = spec.components()?;
            sample_mixture(&weights, &comps, c.n, &mut rng)?
        }
        None => {
            if !c.single {
                return Err(Error::Domain("pass either --single or --mixture-spec".into()));
            }
            let beta = c.beta.ok_or_else(|| Error::Domain("--single needs --beta".into()))?;
            let mu = match &c.mu {
                Some(v) => HyperPoint::with_tolerance(v.clone(), io::INPUT_SHEET_TOL)?,
                None => HyperPoint::origin(c.dim),
            };
            let params = GaussianParams::new(mu, beta)?;
            (gaussian::sample_with_rng(&params, c.n, &mut rng)?, None)
        }
    };
    let text = points_csv(&points, labels.as_deref(), c.format.into())?;
    match &c.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn sample_mixture(weights: &[f64], comps: &[GaussianParams], n: usize, rng: &mut ChaCha20Rng) -> Result<(Vec<HyperPoint>, Option<Vec<usize>>)> {
    use rand::distr::{weighted::WeightedIndex, Distribution};
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let pick = WeightedIndex::new(weights).map_err(|e| Error::Domain(format!("mixture weights: {e}")))?;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let k = pick.sample(rng);
        points.extend(gaussian::sample_with_rng(&comps[k], 1, rng)?);
        labels.push(k);
    }
    Ok((points, Some(labels)))
}

fn run_simulate(c: SimulateCmd) -> Result<bool> {
    std::fs::create_dir_all(&c.out_dir).map_err(|e| Error::io(&c.out_dir, e))?;
    let dir = &c.out_dir;
    let model = radial_model(2, ScaleBox::default().lo, ScaleBox::default().hi, c.grid_cache.as_deref())?;
    let mixture = MixtureSimConfig {
        seed: c.seed,
        restarts: c.restarts,
        mode: match c.mode {
            FitMode::Em => Mode::Em,
            FitMode::Gem => Mode::Gem,
        },
        inner_l: c.inner_l,
        threads: c.threads.max(1),
        ..Default::default()
    };
    match c.study {
        Study::WeightedSingle => {
            let mut cfg = WeightedSingleConfig {
                seed: c.seed,
                threads: c.threads.max(1),
                ..Default::default()
            };
            if let Some(r) = c.replicates {
                cfg.replicates = r;
            }
            if let Some(ns) = c.n_list {
                cfg.n_list = ns;
            }
            let s = eval::sim_weighted_single(&cfg, &model)?;
            write_text(&dir.join("weighted_single.csv"), &s.to_csv())?;
            write_text(&dir.join("weighted_single_timing.csv"), &s.timing_csv())?;
        }
        Study::MixtureRecovery => {
            let mut cfg = MixtureSimConfig {
                replicates: c.replicates.unwrap_or(10),
                ..mixture
            };
            if let Some(ns) = c.n_list {
                cfg.n_list = ns;
            }
            let s = eval::sim_mixture(&cfg, &model)?;
            write_text(&dir.join("mixture_recovery.csv"), &s.to_csv())?;
            write_text(&dir.join("mixture_recovery_timing.csv"), &s.timing_csv())?;
        }
        Study::ModelSelection => {
            let mut cfg = SelectionConfig {
                mixture: MixtureSimConfig {
                    replicates: c.replicates.unwrap_or(5),
                    ..mixture
                },
                ..Default::default()
            };
            if let Some(ns) = c.n_list {
                cfg.n_list = ns;
            }
            let out = eval::model_selection(&cfg, &model)?;
            write_text(&dir.join("model_selection.csv"), &out.to_csv())?;
            write_text(&dir.join("bic_paths.csv"), &out.bic_paths_csv())?;
        }
        Study::EmVsGem => {
            let mut cfg = EmGemConfig {
                mixture: MixtureSimConfig {
                    replicates: c.replicates.unwrap_or(10),
                    ..mixture
                },
                ..Default::default()
            };
            if let Some(ns) = c.n_list {
                cfg.n = *ns.first().ok_or_else(|| Error::Domain("--n-list is empty".into()))?;
            }
            let out = eval::em_vs_gem(&cfg, &model)?;
            write_text(&dir.join("em_vs_gem.csv"), &out.summary.to_csv())?;
            write_text(&dir.join("em_vs_gem_timing.csv"), &out.summary.timing_csv())?;
            let mut runs = String::from("method,replicate,loglik,inner_steps,outer_iterations,converged,center_error,scale_error,ari\n");
            for r in &out.runs {
                runs.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.method, r.replicate, r.loglik, r.inner_steps, r.outer_iterations, r.converged, r.center_error, r.scale_error, r.ari
                ));
            }
            write_text(&dir.join("em_vs_gem_runs.csv"), &runs)?;
            let traces = dir.join("traces");
            std::fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
            for r in &out.runs {
                write_text(&traces.join(format!("{}_rep{}.csv", r.method, r.replicate)), &r.trace_csv())?;
            }
        }
    }
    Ok(true)
}

/// Largest difference between chart distances over a deterministic subset of pairs.
fn distance_drift(points: &[HyperPoint]) -> Result<f64> {
    let n = points.len();
    let step = (n / 40).max(1);
    let idx: Vec<usize> = (0..n).step_by(step).collect();
    let mut worst: f64 = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let h = distance(&points[i], &points[j])?;
            let p = poincare_distance(&to_poincare(&points[i]), &to_poincare(&points[j]))?;
            worst = worst.max((h - p).abs() / h.max(1.0));
        }
    }
    Ok(worst)
}

fn run_convert(c: ConvertCmd) -> Result<bool> {
    let to: Format = c.to.into();
    let from = match to {
        Format::Hyperboloid => Format::Poincare,
        Format::Poincare => Format::Hyperboloid,
    };
    let col = match c.label_column {
        Some(0) => return Err(Error::Domain("--label-column is 1-based".into())),
        v => v.map(|v| v - 1),
    };
    let data = load_dataset(&c.input, from, col)?;
    let drift = distance_drift(&data.points)?;
    write_text(&c.out, &points_csv(&data.points, data.labels.as_deref(), to)?)?;
    println!("converted {} points from {from} to {to}; max pairwise distance drift {drift:.3e}", data.points.len());
    Ok(true)
}
