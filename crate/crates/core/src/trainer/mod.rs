//! Collocation sampling, the loss families, and the training loops.

pub mod loss;
pub mod model;
pub mod sampling;
pub mod train;

pub use loss::{augmented_loss, integral_loss, parametric_pde_loss, pde_loss, LossGrad};
pub use model::{Networks, SolutionNet, SurrogateModel};
pub use sampling::{allocate, sample_integral_batch, sample_pde_batch, BoundaryPoint, CollocationBatch};
pub use train::{
    build_networks, train, train_augmented, validation_loss, AugmentedRun, LogEntry, TrainingRun,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{DomainBox, IntegralProblem, LossWeights, PdeProblem};

/// A problem the trainer can fit.
#[derive(Clone, Debug)]
pub enum Problem {
    Pde(PdeProblem),
    Integral(IntegralProblem),
}

impl Problem {
    pub fn id(&self) -> &str {
        match self {
            Problem::Pde(p) => &p.id,
            Problem::Integral(p) => &p.id,
        }
    }

    pub fn domain(&self) -> DomainBox {
        match self {
            Problem::Pde(p) => p.domain.clone(),
            Problem::Integral(p) => p.domain(),
        }
    }

    pub fn param_domain(&self) -> &DomainBox {
        match self {
            Problem::Pde(p) => &p.param_domain,
            Problem::Integral(p) => &p.param_domain,
        }
    }

    pub fn with_param_domain(&self, param_domain: DomainBox) -> Problem {
        match self {
            Problem::Pde(p) => Problem::Pde(PdeProblem {
                param_domain,
                ..p.clone()
            }),
            Problem::Integral(p) => Problem::Integral(IntegralProblem {
                param_domain,
                ..p.clone()
            }),
        }
    }
}

impl From<PdeProblem> for Problem {
    fn from(p: PdeProblem) -> Self {
        Problem::Pde(p)
    }
}

impl From<IntegralProblem> for Problem {
    fn from(p: IntegralProblem) -> Self {
        Problem::Integral(p)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshMode {
    /// Fresh collocation points every iteration.
    #[default]
    MeshFree,
    /// One batch drawn up front and reused.
    FixedMesh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Interior (or integral pair) points per batch, `N`.
    pub interior_points: usize,
    /// Boundary points per batch, `J`.
    pub boundary_points: usize,
    pub iterations: usize,
    /// Stop once the 100-iteration moving average of the loss is below this.
    pub loss_threshold: f64,
    pub seed: u64,
    pub weights: LossWeights,
    pub mode: MeshMode,
    /// Train over the whole parameter box; otherwise at `theta`.
    pub parametric: bool,
    /// Parameter value for non-parametric training (defaults to the box centre).
    pub theta: Option<Vec<f64>>,
    pub hidden: Vec<usize>,
    /// Use a Gaussian RBF head with this many bases (2-D PDE problems only).
    pub rbf_bases: Option<usize>,
    pub learning_rate: f64,
    /// Learning rate reached at the iteration cap, as a fraction of `learning_rate`;
    /// the rate decays geometrically in between. 1 keeps it constant.
    pub final_lr_ratio: f64,
    /// Record one log row every this many iterations.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            interior_points: 1024,
            boundary_points: 256,
            iterations: 2000,
            loss_threshold: 0.0,
            seed: 0,
            weights: LossWeights::default(),
            mode: MeshMode::MeshFree,
            parametric: true,
            theta: None,
            hidden: vec![32, 32, 32],
            rbf_bases: None,
            learning_rate: 1e-3,
            final_lr_ratio: 1.0,
            log_every: 10,
        }
    }
}

impl TrainConfig {
    /// Learning rate used at iteration `it`.
    pub fn learning_rate_at(&self, it: usize) -> f64 {
        if self.final_lr_ratio == 1.0 {
            return self.learning_rate;
        }
        self.learning_rate * self.final_lr_ratio.powf(it as f64 / self.iterations as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iteration cap must be at least 1".into()));
        }
        if self.interior_points == 0 || self.boundary_points == 0 {
            return Err(Error::Config("batch sizes N and J must be at least 1".into()));
        }
        if !(self.loss_threshold >= 0.0) {
            return Err(Error::Config("loss threshold must be nonnegative".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.final_lr_ratio > 0.0 && self.final_lr_ratio <= 1.0) {
            return Err(Error::Config("final_lr_ratio must lie in (0, 1]".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if self.rbf_bases == Some(0) {
            return Err(Error::Config("an RBF head needs at least one basis".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        self.weights.validate()
    }
}

/// Draw one collocation batch for `problem` with the configured sizes.
pub fn sample_batch<R: Rng + ?Sized>(
    problem: &Problem,
    config: &TrainConfig,
    rng: &mut R,
) -> CollocationBatch {
    match problem {
        Problem::Pde(p) => sample_pde_batch(p, config.interior_points, config.boundary_points, rng),
        Problem::Integral(p) => sample_integral_batch(p, config.interior_points, rng),
    }
}
