//! Training loops.

use std::collections::VecDeque;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_dense, AdamConfig, DenseNetwork, OptimizerState, RbfHead};
use crate::nn::rbf::RAW_PER_BASIS;
use crate::problems::{Dataset, DomainBox};
use crate::trainer::loss::{augmented_objective, objective, uses_sqrt_ansatz};
use crate::trainer::model::{Networks, SolutionNet, SurrogateModel};
use crate::trainer::{sample_batch, MeshMode, Problem, TrainConfig};

const MOVING_WINDOW: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingRun {
    pub model: SurrogateModel,
    pub log: Vec<LogEntry>,
}

#[derive(Clone, Debug)]
pub struct AugmentedRun {
    pub model: SurrogateModel,
    /// Parameter estimate found together with the network.
    pub theta: Vec<f64>,
    pub log: Vec<LogEntry>,
}

fn dense(dims: Vec<usize>, seed: u64, lower: &[f64], upper: &[f64]) -> Result<DenseNetwork> {
    init_dense(&dims, seed)?.with_input_box(lower, upper)
}

fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

/// Parameter box the model is trained on: the problem's box, or the single
/// point `theta` (default: box centre) for non-parametric training.
fn training_param_domain(problem: &Problem, config: &TrainConfig) -> Result<DomainBox> {
    let full = problem.param_domain();
    if config.parametric {
        return Ok(full.clone());
    }
    let theta = config.theta.clone().unwrap_or_else(|| full.centre());
    if theta.len() != full.dim() {
        return Err(Error::Config(format!(
            "theta has {} entries, problem has {} parameters",
            theta.len(),
            full.dim()
        )));
    }
    Ok(DomainBox::point(&theta))
}

/// Freshly initialized networks for `problem` (inputs normalized to the boxes).
pub fn build_networks(problem: &Problem, config: &TrainConfig) -> Result<Networks> {
    let pbox = training_param_domain(problem, config)?;
    let feed_theta = config.parametric && pbox.dim() > 0;
    let (plo, pup) = if feed_theta {
        (pbox.lower.clone(), pbox.upper.clone())
    } else {
        (vec![], vec![])
    };
    let dims = |input: usize, output: usize| {
        let mut d = vec![input];
        d.extend(&config.hidden);
        d.push(output);
        d
    };
    match problem {
        Problem::Pde(p) => {
            let d = p.domain.dim();
            if let Some(k) = config.rbf_bases {
                if d != 2 || !feed_theta {
                    return Err(Error::Config(
                        "an RBF head needs a 2-D domain and parametric training".into(),
                    ));
                }
                let net = dense(dims(pbox.dim(), RAW_PER_BASIS * k), config.seed, &plo, &pup)?;
                let head = RbfHead::new(
                    net,
                    k,
                    [p.domain.lower[0], p.domain.lower[1]],
                    [p.domain.upper[0], p.domain.upper[1]],
                )?;
                return Ok(Networks::Pde(SolutionNet::Rbf(head)));
            }
            let net = dense(
                dims(d + plo.len(), 1),
                config.seed,
                &cat(&p.domain.lower, &plo),
                &cat(&p.domain.upper, &pup),
            )?;
            Ok(Networks::Pde(SolutionNet::Dense(net)))
        }
        Problem::Integral(p) => {
            if config.rbf_bases.is_some() {
                return Err(Error::Config("RBF heads are for PDE problems".into()));
            }
            let (a, b) = (p.a, p.b_star);
            let solution = dense(dims(1 + plo.len(), 1), config.seed, &cat(&[a], &plo), &cat(&[b], &pup))?;
            let outputs = if uses_sqrt_ansatz(p) { 2 } else { 1 };
            let integrator = dense(
                dims(2 + plo.len(), outputs),
                config.seed.wrapping_add(1),
                &cat(&[a, a], &plo),
                &cat(&[b, b], &pup),
            )?;
            Ok(Networks::Integral {
                solution,
                integrator,
            })
        }
    }
}

struct Recorder {
    start: Instant,
    window: VecDeque<f64>,
    log: Vec<LogEntry>,
    every: usize,
}

impl Recorder {
    fn new(every: usize) -> Self {
        Recorder {
            start: Instant::now(),
            window: VecDeque::with_capacity(MOVING_WINDOW),
            log: vec![],
            every,
        }
    }

    /// Record the loss of `iteration`; returns the moving average once the window is full.
    fn push(&mut self, iteration: usize, loss: f64, last: bool) -> Option<f64> {
        if iteration % self.every == 0 || last {
            self.log.push(LogEntry {
                iteration,
                loss,
                wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
            });
        }
        if self.window.len() == MOVING_WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(loss);
        (self.window.len() == MOVING_WINDOW)
            .then(|| self.window.iter().sum::<f64>() / MOVING_WINDOW as f64)
    }

    fn finish(&mut self, iteration: usize, loss: f64) {
        if self.log.last().map(|e| e.iteration) != Some(iteration) {
            self.log.push(LogEntry {
                iteration,
                loss,
                wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
}

fn diverged(iteration: usize, e: Error) -> Error {
    match e {
        Error::Numerical(detail) => Error::Diverged { iteration, detail },
        other => other,
    }
}

/// Fit the networks for `problem`.
///
/// Mesh-free mode draws a fresh batch every iteration, fixed-mesh mode reuses
/// the first one. Each iteration is one Adam step; training stops at the
/// iteration cap or once the 100-iteration moving average of the loss falls
/// below the threshold.
pub fn train(problem: &Problem, config: &TrainConfig) -> Result<TrainingRun> {
    config.validate()?;
    let pbox = training_param_domain(problem, config)?;
    let problem = problem.with_param_domain(pbox.clone());
    let mut nets = build_networks(&problem, config)?;
    let mut adam = OptimizerState::new(
        nets.param_count(),
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut batch = sample_batch(&problem, config, &mut rng);
    let mut rec = Recorder::new(config.log_every);
    let mut last_loss = f64::NAN;
    let mut done = 0;
    for it in 0..config.iterations {
        if it > 0 && config.mode == MeshMode::MeshFree {
            batch = sample_batch(&problem, config, &mut rng);
        }
        let lg = objective(&nets, &problem, &batch, None, &config.weights, true)
            .map_err(|e| diverged(it, e))?;
        if !lg.value.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                detail: format!("loss is {}", lg.value),
            });
        }
        adam.config.learning_rate = config.learning_rate_at(it);
        adam.step_blocks(nets.param_blocks_mut(), &lg.networks)?;
        done = it + 1;
        last_loss = lg.value;
        let avg = rec.push(it, lg.value, it + 1 == config.iterations);
        if avg.is_some_and(|a| a < config.loss_threshold) {
            break;
        }
    }
    rec.finish(done - 1, last_loss);
    Ok(TrainingRun {
        model: SurrogateModel {
            problem_id: problem.id().to_string(),
            networks: nets,
            domain: problem.domain(),
            param_domain: pbox,
            final_loss: last_loss,
            iterations: done,
            seed: config.seed,
            train_config: config.clone(),
        },
        log: rec.log,
    })
}

/// Minimise the data-augmented loss over the network parameters and `theta`
/// together, starting from `theta0`.
pub fn train_augmented(
    problem: &Problem,
    dataset: &Dataset,
    config: &TrainConfig,
    theta0: &[f64],
) -> Result<AugmentedRun> {
    config.validate()?;
    if theta0.len() != problem.param_domain().dim() {
        return Err(Error::Config("initial theta has the wrong length".into()));
    }
    let mut cfg = config.clone();
    cfg.parametric = false;
    cfg.theta = Some(theta0.to_vec());
    let mut nets = build_networks(problem, &cfg)?;
    let mut theta = theta0.to_vec();
    let adam_cfg = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = OptimizerState::new(nets.param_count() + theta.len(), adam_cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut batch = sample_batch(problem, config, &mut rng);
    let mut rec = Recorder::new(config.log_every);
    let mut last_loss = f64::NAN;
    let mut done = 0;
    for it in 0..config.iterations {
        if it > 0 && config.mode == MeshMode::MeshFree {
            batch = sample_batch(problem, config, &mut rng);
        }
        let lg = augmented_objective(&nets, problem, &theta, &batch, dataset, &config.weights, true)
            .map_err(|e| diverged(it, e))?;
        let mut grads = lg.networks;
        grads.extend(&lg.theta);
        let mut blocks = nets.param_blocks_mut();
        blocks.push(&mut theta);
        adam.config.learning_rate = config.learning_rate_at(it);
        adam.step_blocks(blocks, &grads)?;
        done = it + 1;
        last_loss = lg.value;
        let avg = rec.push(it, lg.value, it + 1 == config.iterations);
        if avg.is_some_and(|a| a < config.loss_threshold) {
            break;
        }
    }
    rec.finish(done - 1, last_loss);
    Ok(AugmentedRun {
        model: SurrogateModel {
            problem_id: problem.id().to_string(),
            networks: nets,
            domain: problem.domain(),
            param_domain: DomainBox::point(&theta),
            final_loss: last_loss,
            iterations: done,
            seed: config.seed,
            train_config: cfg,
        },
        theta,
        log: rec.log,
    })
}

/// Loss of `model` on a fresh batch of `n` interior points (and `n / 4` boundary points).
pub fn validation_loss(model: &SurrogateModel, problem: &Problem, n: usize, seed: u64) -> Result<f64> {
    let problem = problem.with_param_domain(model.param_domain.clone());
    let cfg = TrainConfig {
        interior_points: n,
        boundary_points: (n / 4).max(1),
        ..model.train_config.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = sample_batch(&problem, &cfg, &mut rng);
    Ok(objective(&model.networks, &problem, &batch, None, &cfg.weights, false)?.value)
}
