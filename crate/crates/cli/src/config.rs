//! Run configuration: a JSON file merged over per-experiment defaults.

use std::fs;
use std::path::{Path, PathBuf};

use deepsurrogate::mcmc::InferenceSpec;
use deepsurrogate::problems::benchmarks::{abel_constant, second_kind_exponential};
use deepsurrogate::problems::fin::{DEFAULT_INNER_RADIUS, DEFAULT_U_INNER, DEFAULT_U_OUTER};
use deepsurrogate::problems::voltammetry::{E_START, T_MAX, X_MAX};
use deepsurrogate::problems::{
    biot_prior_domain, fin_problem, voltammetry_integral_on, voltammetry_pde_on, DomainBox,
};
use deepsurrogate::reference::ObservationPlacement;
use deepsurrogate::trainer::{Problem, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    VoltammetryPde,
    VoltammetryIntegral,
    Biot,
    Custom,
}

/// Closed-form test problems reachable through the `custom` experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomProblem {
    SecondKindExponential,
    AbelConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub e_start: f64,
    pub e0_range: [f64; 2],
    pub x_max: f64,
    pub t_max: f64,
    pub inner_radius: f64,
    pub u_inner: f64,
    pub u_outer: f64,
    pub custom: CustomProblem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Parameter for `solve-ref`; the experiment's true value when absent.
    pub theta: Option<Vec<f64>>,
    pub dt: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub points: usize,
    pub sigma: f64,
    /// True parameter for the voltammetry experiments.
    pub theta_true: Vec<f64>,
    /// True Biot number `scale * exp(x - shift)`.
    pub biot_scale: f64,
    pub biot_shift: f64,
    pub placement: ObservationPlacement,
    /// Observation interval; the problem domain when absent.
    pub interval: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    /// Prior box for theta; the surrogate's parameter box when absent.
    pub theta_prior: Option<DomainBox>,
    pub sigma_prior: [f64; 2],
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    /// One per coordinate, sigma last; 5% of the prior widths when absent.
    pub initial_scales: Option<Vec<f64>>,
    pub adapt_interval: usize,
    pub target_acceptance: f64,
    /// Grid size for density and band curves.
    pub grid_points: usize,
    /// Upper bound on the samples used for densities and surrogate bands (evenly thinned).
    pub max_curve_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentedConfig {
    pub train: TrainConfig,
    /// Starting coefficients; the prior-box centre when absent.
    pub theta0: Option<Vec<f64>>,
}

/// Input files; defaults point into the output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub checkpoint_dir: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub band: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Write zero wall-clock times so reruns are byte-identical.
    pub deterministic: bool,
    pub problem: ProblemConfig,
    pub train: TrainConfig,
    pub reference: ReferenceConfig,
    pub data: DataConfig,
    pub inference: InferenceConfig,
    pub augmented: AugmentedConfig,
    #[serde(default)]
    pub inputs: InputPaths,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn train_defaults(experiment: Experiment) -> TrainConfig {
    let base = TrainConfig::default();
    match experiment {
        Experiment::VoltammetryPde => TrainConfig {
            interior_points: 1024,
            boundary_points: 240,
            iterations: 5000,
            hidden: vec![32, 32, 32],
            rbf_bases: Some(100),
            log_every: 50,
            ..base
        },
        Experiment::VoltammetryIntegral => TrainConfig {
            interior_points: 512,
            iterations: 50_000,
            hidden: vec![32, 32, 32],
            learning_rate: 3e-3,
            final_lr_ratio: 0.02,
            log_every: 100,
            ..base
        },
        Experiment::Biot => TrainConfig {
            interior_points: 1024,
            boundary_points: 256,
            iterations: 100_000,
            hidden: vec![32, 32, 32],
            learning_rate: 3e-3,
            final_lr_ratio: 0.02,
            log_every: 100,
            ..base
        },
        Experiment::Custom => TrainConfig {
            interior_points: 256,
            iterations: 30_000,
            hidden: vec![32, 32],
            learning_rate: 3e-3,
            final_lr_ratio: 0.05,
            log_every: 100,
            ..base
        },
    }
}

/// Complete default configuration of an experiment.
pub fn defaults(experiment: Experiment) -> RunConfig {
    let biot = experiment == Experiment::Biot;
    let augmented_train = TrainConfig {
        interior_points: 512,
        boundary_points: 64,
        iterations: 20_000,
        hidden: vec![32, 32, 32],
        learning_rate: 3e-3,
        final_lr_ratio: 0.05,
        log_every: 100,
        ..TrainConfig::default()
    };
    RunConfig {
        experiment,
        seed: 0,
        deterministic: false,
        problem: ProblemConfig {
            e_start: E_START,
            e0_range: [-6.0, 6.0],
            x_max: X_MAX,
            t_max: T_MAX,
            inner_radius: DEFAULT_INNER_RADIUS,
            u_inner: DEFAULT_U_INNER,
            u_outer: DEFAULT_U_OUTER,
            custom: CustomProblem::SecondKindExponential,
        },
        train: train_defaults(experiment),
        reference: ReferenceConfig {
            theta: None,
            dt: 1e-3,
            nodes: 4097,
        },
        data: DataConfig {
            points: if biot { 30 } else { 100 },
            sigma: if biot { 0.003 } else { 0.1 },
            theta_true: vec![0.0],
            biot_scale: 18.0,
            biot_shift: 0.3,
            placement: if biot {
                ObservationPlacement::Equidistant
            } else {
                ObservationPlacement::UniformRandom
            },
            interval: None,
        },
        inference: InferenceConfig {
            theta_prior: None,
            sigma_prior: [0.0, 3.0],
            chains: 10,
            iterations: 50_000,
            burn_in: 10_000,
            initial_scales: None,
            adapt_interval: 100,
            target_acceptance: 0.4,
            grid_points: 200,
            max_curve_samples: 20_000,
        },
        augmented: AugmentedConfig {
            train: augmented_train,
            theta0: None,
        },
        inputs: InputPaths::default(),
    }
}

impl RunConfig {
    /// Merge a JSON document over the defaults of the experiment it names.
    pub fn from_json_value(user: Value) -> CliResult<Self> {
        let experiment: Experiment = match user.get("experiment") {
            Some(e) => serde_json::from_value(e.clone())
                .map_err(|e| CliError::Config(format!("experiment: {e}")))?,
            None => return Err(CliError::Config("config must name an `experiment`".into())),
        };
        let mut base = serde_json::to_value(defaults(experiment))
            .map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, user);
        let cfg: RunConfig =
            serde_json::from_value(base).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_json_value(v)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Propagate the run seed into training and apply the `--seed` override.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.train.seed = self.seed;
        self.augmented.train.seed = self.seed;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.validate()?;
        self.augmented.train.validate()?;
        let [lo, hi] = self.problem.e0_range;
        if !(lo < hi) {
            return Err(CliError::Config(format!("e0_range [{lo}, {hi}] is empty")));
        }
        if !(self.data.sigma >= 0.0) {
            return Err(CliError::Config("data.sigma must be >= 0".into()));
        }
        if self.data.points == 0 {
            return Err(CliError::Config("data.points must be positive".into()));
        }
        if !(self.reference.dt > 0.0) || self.reference.nodes < 3 {
            return Err(CliError::Config("reference needs dt > 0 and at least 3 nodes".into()));
        }
        Ok(())
    }

    /// The configured problem with its full parameter box.
    pub fn problem(&self) -> CliResult<Problem> {
        let p = &self.problem;
        let e0 = || DomainBox::interval(p.e0_range[0], p.e0_range[1]);
        Ok(match self.experiment {
            Experiment::VoltammetryPde => {
                Problem::Pde(voltammetry_pde_on(e0()?, p.e_start, p.x_max, p.t_max))
            }
            Experiment::VoltammetryIntegral => {
                Problem::Integral(voltammetry_integral_on(e0()?, p.e_start, p.t_max)?)
            }
            Experiment::Biot => Problem::Pde(fin_problem(
                biot_prior_domain(),
                p.inner_radius,
                p.u_inner,
                p.u_outer,
            )?),
            Experiment::Custom => Problem::Integral(match p.custom {
                CustomProblem::SecondKindExponential => second_kind_exponential(),
                CustomProblem::AbelConstant => abel_constant(p.t_max)?,
            }),
        })
    }

    /// Sampler settings for a surrogate with parameter box `param_domain`.
    pub fn inference_spec(&self, param_domain: &DomainBox) -> CliResult<InferenceSpec> {
        let inf = &self.inference;
        let prior = inf.theta_prior.clone().unwrap_or_else(|| param_domain.clone());
        if prior.dim() != param_domain.dim()
            || (0..prior.dim()).any(|i| {
                prior.lower[i] < param_domain.lower[i] || prior.upper[i] > param_domain.upper[i]
            })
        {
            return Err(CliError::Config(
                "theta prior must lie inside the surrogate parameter box".into(),
            ));
        }
        let mut spec = InferenceSpec::new(prior, inf.sigma_prior);
        spec.chains = inf.chains;
        spec.iterations = inf.iterations;
        spec.burn_in = inf.burn_in;
        if let Some(s) = &inf.initial_scales {
            spec.initial_scales = s.clone();
        }
        spec.adapt_interval = inf.adapt_interval;
        spec.target_acceptance = inf.target_acceptance;
        spec.seed = self.seed;
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical JSON of everything that determines the outputs (input paths excluded;
    /// consumed files are hashed by content instead).
    pub fn canonical(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Value::Object(m) = &mut v {
            m.remove("inputs");
        }
        v.to_string()
    }
}

/// Configuration document for an experiment with every default spelled out.
pub fn default_document(experiment: Experiment) -> Value {
    let mut v = serde_json::to_value(defaults(experiment)).expect("config serialises");
    v["inputs"] = json!({});
    v
}
