//! The five verbs. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use deepsurrogate::mcmc::{
    function_band, kde, run_chains, samples_csv, silverman_bandwidth, summarize, Band, Chain,
    CurrentModel, ForwardModel,
};
use deepsurrogate::nn::Checkpoint;
use deepsurrogate::problems::benchmarks::{abel_constant, second_kind_exponential};
use deepsurrogate::problems::fin::BIOT_TERMS;
use deepsurrogate::problems::{biot_eval, voltammetry_integral_on, Dataset, DomainBox};
use deepsurrogate::reference::{
    gen_synthetic_data, solve_fin_fd, solve_fin_fd_with, solve_volterra_first_kind,
    solve_volterra_second_kind, Curve, GridSolution,
};
use deepsurrogate::trainer::{train, train_augmented, SurrogateModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{CustomProblem, Experiment, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{read_numeric_csv, ConfigHasher, Provenance, Writer, FORMAT_VERSION};

pub const SOLUTION_FILE: &str = "solution.json";
pub const INTEGRATOR_FILE: &str = "integrator.json";
pub const LOG_FILE: &str = "train_log.csv";
pub const REFERENCE_FILE: &str = "reference.csv";
pub const REFERENCE_META_FILE: &str = "reference.json";
pub const DATA_FILE: &str = "data.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const KDE_FILE: &str = "kde.csv";
pub const FIT_FILE: &str = "fit.csv";
pub const BAND_FILE: &str = "band.csv";
pub const REPORT_FILE: &str = "augmented_report.json";

/// Data stream index, so observation noise never shares draws with training or sampling.
const DATA_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Train,
    SolveRef,
    GenData,
    Infer,
    CompareAugmented,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Train => "train",
            Verb::SolveRef => "solve-ref",
            Verb::GenData => "gen-data",
            Verb::Infer => "infer",
            Verb::CompareAugmented => "compare-augmented",
        }
    }
}

pub fn run(verb: Verb, cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    match verb {
        Verb::Train => cmd_train(cfg, out),
        Verb::SolveRef => cmd_solve_ref(cfg, out),
        Verb::GenData => cmd_gen_data(cfg, out),
        Verb::Infer => cmd_infer(cfg, out),
        Verb::CompareAugmented => cmd_compare_augmented(cfg, out),
    }
}

fn provenance(cfg: &RunConfig, hasher: ConfigHasher) -> Provenance {
    Provenance {
        seed: cfg.seed,
        config_hash: hasher.finish(),
        format_version: FORMAT_VERSION,
    }
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let problem = cfg.problem()?;
    let mut w = Writer::new(out, provenance(cfg, ConfigHasher::new(cfg, "train")))?;
    let run = train(&problem, &cfg.train)?;
    for (role, ck) in run.model.checkpoints() {
        let ck = ck.with_meta("provenance", w.provenance.to_json());
        w.raw(&format!("{role}.json"), &(ck.to_json()? + "\n"))?;
    }
    let mut log = String::from("iteration,loss,wall_ms\n");
    for e in &run.log {
        let ms = if cfg.deterministic { 0.0 } else { e.wall_ms };
        log.push_str(&format!("{},{:?},{:?}\n", e.iteration, e.loss, ms));
    }
    w.csv(LOG_FILE, &log, &[])?;
    Ok(w.written)
}

fn biot_truth(cfg: &RunConfig) -> impl Fn(f64) -> f64 {
    let (s, c) = (cfg.data.biot_scale, cfg.data.biot_shift);
    move |x| s * (x - c).exp()
}

fn biot_grid(cfg: &RunConfig, theta: Option<&[f64]>) -> CliResult<GridSolution> {
    let p = &cfg.problem;
    let n = cfg.reference.nodes;
    Ok(match theta {
        Some(th) => {
            if th.len() != BIOT_TERMS {
                return Err(CliError::Config(format!(
                    "Biot parameter needs {BIOT_TERMS} coefficients, got {}",
                    th.len()
                )));
            }
            solve_fin_fd(th, p.inner_radius, p.u_inner, p.u_outer, n)?
        }
        None => solve_fin_fd_with(biot_truth(cfg), p.inner_radius, p.u_inner, p.u_outer, n)?,
    })
}

/// Reference solution at `theta` (the experiment's truth when `None`).
pub fn reference_grid(cfg: &RunConfig, theta: Option<&[f64]>) -> CliResult<GridSolution> {
    let dt = cfg.reference.dt;
    match cfg.experiment {
        Experiment::VoltammetryPde | Experiment::VoltammetryIntegral => {
            let p = &cfg.problem;
            let e0 = DomainBox::interval(p.e0_range[0], p.e0_range[1])?;
            let problem = voltammetry_integral_on(e0, p.e_start, p.t_max)?;
            let th = theta.unwrap_or(&cfg.data.theta_true);
            Ok(solve_volterra_first_kind(&problem, th, dt)?)
        }
        Experiment::Biot => biot_grid(cfg, theta),
        Experiment::Custom => {
            let th = theta.unwrap_or(&[]);
            Ok(match cfg.problem.custom {
                CustomProblem::SecondKindExponential => {
                    solve_volterra_second_kind(&second_kind_exponential(), th, dt)?
                }
                CustomProblem::AbelConstant => {
                    solve_volterra_first_kind(&abel_constant(cfg.problem.t_max)?, th, dt)?
                }
            })
        }
    }
}

pub fn cmd_solve_ref(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut w = Writer::new(out, provenance(cfg, ConfigHasher::new(cfg, "solve-ref")))?;
    let grid = reference_grid(cfg, cfg.reference.theta.as_deref())?;
    w.csv(REFERENCE_FILE, &grid.to_csv(), &[])?;
    w.json(REFERENCE_META_FILE, &grid.provenance())?;
    Ok(w.written)
}

pub fn cmd_gen_data(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut w = Writer::new(out, provenance(cfg, ConfigHasher::new(cfg, "gen-data")))?;
    let grid = reference_grid(cfg, None)?;
    let interval = cfg
        .data
        .interval
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| Curve::range(&grid));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(DATA_STREAM);
    let data = gen_synthetic_data(
        &grid,
        interval,
        cfg.data.placement,
        cfg.data.points,
        cfg.data.sigma,
        &mut rng,
    )?;
    let mut body = String::from("x,z\n");
    for (x, z) in data.iter() {
        body.push_str(&format!("{:?},{z:?}\n", x[0]));
    }
    let truth = match cfg.experiment {
        Experiment::Biot => (
            "biot_true",
            format!("{:?}*exp(x-{:?})", cfg.data.biot_scale, cfg.data.biot_shift),
        ),
        Experiment::Custom => ("theta_true", String::new()),
        _ => ("theta_true", fmt_list(&cfg.data.theta_true)),
    };
    w.csv(
        DATA_FILE,
        &body,
        &[("sigma_true", format!("{:?}", cfg.data.sigma)), (truth.0, truth.1)],
    )?;
    Ok(w.written)
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let (header, rows) = read_numeric_csv(path)?;
    if header.len() != 2 {
        return Err(CliError::Config(format!(
            "{}: dataset needs two columns (x, z)",
            path.display()
        )));
    }
    let inputs = rows.iter().map(|r| vec![r[0]]).collect();
    let responses = rows.iter().map(|r| r[1]).collect();
    Ok(Dataset::new(inputs, responses)?)
}

fn load_surrogate(dir: &Path, hasher: &mut ConfigHasher) -> CliResult<SurrogateModel> {
    let sol_path = dir.join(SOLUTION_FILE);
    let sol_bytes = read_bytes(&sol_path)?;
    hasher.absorb(&sol_bytes);
    let parse = |path: &Path, bytes: &[u8]| {
        let text = String::from_utf8_lossy(bytes);
        Checkpoint::from_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    };
    let solution = parse(&sol_path, &sol_bytes)?;
    let int_path = dir.join(INTEGRATOR_FILE);
    let integrator = if int_path.exists() {
        let bytes = read_bytes(&int_path)?;
        hasher.absorb(&bytes);
        Some(parse(&int_path, &bytes)?)
    } else {
        None
    };
    Ok(SurrogateModel::from_checkpoints(&solution, integrator.as_ref())?)
}

fn thinned(chains: &[Chain], max: usize) -> Vec<&[f64]> {
    let all: Vec<&[f64]> = chains.iter().flat_map(Chain::iter).collect();
    let stride = all.len().div_ceil(max.max(1)).max(1);
    all.into_iter().step_by(stride).collect()
}

fn kde_csv(samples: &[&[f64]], grid_points: usize) -> CliResult<String> {
    let dim = samples[0].len();
    let mut out = String::from("coordinate,x,density\n");
    for j in 0..dim {
        let xs: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        // a coordinate that never moved has no density to estimate
        let Ok(h) = silverman_bandwidth(&xs) else {
            continue;
        };
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
        let grid = linspace(lo, hi, grid_points);
        for (x, d) in grid.iter().zip(kde(&xs, &grid)?) {
            out.push_str(&format!("{j},{x:?},{d:?}\n"));
        }
    }
    Ok(out)
}

/// Posterior-mean prediction at the data inputs.
fn fit_csv(model: &dyn ForwardModel, data: &Dataset, samples: &[&[f64]]) -> CliResult<String> {
    let p = model.param_dim();
    let mut mean = vec![0.0; data.len()];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(model.predict(&data.inputs, &s[..p])?) {
            *m += v;
        }
    }
    let mut out = String::from("x,z,fitted\n");
    for ((x, z), m) in data.iter().zip(&mean) {
        out.push_str(&format!("{:?},{z:?},{:?}\n", x[0], m / samples.len() as f64));
    }
    Ok(out)
}

fn check_problem(cfg: &RunConfig, model: &SurrogateModel) -> CliResult<()> {
    let want = cfg.problem()?.id().to_string();
    if model.problem_id != want {
        return Err(CliError::Config(format!(
            "checkpoint is for `{}`, config expects `{want}`",
            model.problem_id
        )));
    }
    if model.param_dim() == 0 {
        return Err(CliError::Config("surrogate has no parameters to infer".into()));
    }
    Ok(())
}

pub fn cmd_infer(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut hasher = ConfigHasher::new(cfg, "infer");
    let ck_dir = cfg.inputs.checkpoint_dir.clone().unwrap_or_else(|| out.to_path_buf());
    let model = load_surrogate(&ck_dir, &mut hasher)?;
    check_problem(cfg, &model)?;
    let data_path = cfg.inputs.dataset.clone().unwrap_or_else(|| out.join(DATA_FILE));
    hasher.absorb(&read_bytes(&data_path)?);
    let data = load_dataset(&data_path)?;
    let spec = cfg.inference_spec(&model.param_domain)?;

    let current;
    let forward: &dyn ForwardModel = if cfg.experiment == Experiment::VoltammetryPde {
        current = CurrentModel(&model);
        &current
    } else {
        if model.x_dim() != 1 {
            return Err(CliError::Config("dataset inputs do not match the surrogate".into()));
        }
        &model
    };
    let chains = run_chains(forward, &data, &spec)?;
    let summary = summarize(&chains)?;

    let mut w = Writer::new(out, provenance(cfg, hasher))?;
    w.csv(SAMPLES_FILE, &samples_csv(&chains), &[])?;
    w.json(SUMMARY_FILE, &summary)?;
    let curve_samples = thinned(&chains, cfg.inference.max_curve_samples);
    w.csv(KDE_FILE, &kde_csv(&curve_samples, cfg.inference.grid_points)?, &[])?;
    w.csv(FIT_FILE, &fit_csv(forward, &data, &curve_samples)?, &[])?;
    if cfg.experiment == Experiment::Biot {
        let p = model.param_dim();
        let grid = linspace(cfg.problem.inner_radius, 1.0, cfg.inference.grid_points);
        let band = function_band(&chains, |x, s| biot_eval(&s[..p], x), &grid)?;
        w.csv(BAND_FILE, &band.to_csv(), &[])?;
    }
    Ok(w.written)
}

/// Trapezoid L2 distance between two curves on a shared grid.
pub fn l2_distance(x: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let d2: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).collect();
    x.windows(2)
        .zip(d2.windows(2))
        .map(|(xs, ds)| 0.5 * (xs[1] - xs[0]) * (ds[0] + ds[1]))
        .sum::<f64>()
        .sqrt()
}

#[derive(Serialize)]
pub struct AugmentedReport {
    pub x: Vec<f64>,
    pub true_curve: Vec<f64>,
    pub augmented: Vec<f64>,
    pub bayes_mean: Vec<f64>,
    pub bayes_low: Vec<f64>,
    pub bayes_high: Vec<f64>,
    pub augmented_theta: Vec<f64>,
    pub l2_augmented: f64,
    pub l2_bayes: f64,
    pub augmented_final_loss: f64,
}

fn load_band(path: &Path) -> CliResult<Band> {
    let (header, rows) = read_numeric_csv(path)?;
    if header != ["x", "mean", "low", "high"] {
        return Err(CliError::Config(format!("{}: not a band file", path.display())));
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(Band {
        x: col(0),
        mean: col(1),
        low: col(2),
        high: col(3),
    })
}

pub fn cmd_compare_augmented(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    if cfg.experiment != Experiment::Biot {
        return Err(CliError::Config(
            "compare-augmented is defined for the biot experiment".into(),
        ));
    }
    let mut hasher = ConfigHasher::new(cfg, "compare-augmented");
    let data_path = cfg.inputs.dataset.clone().unwrap_or_else(|| out.join(DATA_FILE));
    hasher.absorb(&read_bytes(&data_path)?);
    let data = load_dataset(&data_path)?;
    let band_path = cfg.inputs.band.clone().unwrap_or_else(|| out.join(BAND_FILE));
    hasher.absorb(&read_bytes(&band_path)?);
    let band = load_band(&band_path)?;

    let problem = cfg.problem()?;
    let theta0 = cfg
        .augmented
        .theta0
        .clone()
        .unwrap_or_else(|| problem.param_domain().centre());
    let run = train_augmented(&problem, &data, &cfg.augmented.train, &theta0)?;

    let truth = biot_truth(cfg);
    let true_curve: Vec<f64> = band.x.iter().map(|&x| truth(x)).collect();
    let augmented: Vec<f64> = band.x.iter().map(|&x| biot_eval(&run.theta, x)).collect();
    let report = AugmentedReport {
        l2_augmented: l2_distance(&band.x, &augmented, &true_curve),
        l2_bayes: l2_distance(&band.x, &band.mean, &true_curve),
        x: band.x,
        true_curve,
        augmented,
        bayes_mean: band.mean,
        bayes_low: band.low,
        bayes_high: band.high,
        augmented_theta: run.theta,
        augmented_final_loss: run.model.final_loss,
    };
    let mut w = Writer::new(out, provenance(cfg, hasher))?;
    w.json(REPORT_FILE, &report)?;
    Ok(w.written)
}
