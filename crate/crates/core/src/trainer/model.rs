//! Trained networks and the surrogate model wrapper.

use ndarray::Array2;
use serde_json::{json, Value};

use crate::nn::rbf::rbf_eval;

use crate::error::{Error, Result};
use crate::nn::{Checkpoint, DenseNetwork, Forward, Jet, RbfHead, Seeds};
use crate::problems::DomainBox;
use crate::trainer::TrainConfig;

/// Solution network of a PDE problem: a dense network on `(x, theta)` or an RBF
/// head on `theta` whose expansion lives on the 2-D domain.
#[derive(Clone, Debug, PartialEq)]
pub enum SolutionNet {
    Dense(DenseNetwork),
    Rbf(RbfHead),
}

/// Forward state kept for the matching backward call.
pub struct NetPass {
    fwd: Forward,
    points: Vec<[f64; 2]>,
    coords: Vec<usize>,
}

/// Rows `(x, theta)` or `x` depending on what the network consumes.
pub(crate) fn input_rows(
    input_dim: usize,
    xs: &[&[f64]],
    thetas: &[&[f64]],
) -> Result<Array2<f64>> {
    let n = xs.len();
    if n == 0 {
        return Ok(Array2::zeros((0, input_dim)));
    }
    let d = xs[0].len();
    let p = thetas.first().map_or(0, |t| t.len());
    let with_theta = if input_dim == d + p {
        true
    } else if input_dim == d {
        false
    } else {
        return Err(Error::Shape(format!(
            "network takes {input_dim} inputs; points have {d} coordinates and {p} parameters"
        )));
    };
    let mut rows = Array2::zeros((n, input_dim));
    for i in 0..n {
        let mut row = rows.row_mut(i);
        for (j, v) in xs[i].iter().enumerate() {
            row[j] = *v;
        }
        if with_theta {
            for (j, v) in thetas[i].iter().enumerate() {
                row[d + j] = *v;
            }
        }
    }
    Ok(rows)
}

impl SolutionNet {
    pub fn param_count(&self) -> usize {
        self.dense().param_count()
    }

    pub fn params(&self) -> Vec<f64> {
        self.dense().params()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.dense_mut().set_params(params)
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.dense_mut().param_blocks_mut()
    }

    /// The underlying dense network (the trunk, for an RBF head).
    pub fn dense(&self) -> &DenseNetwork {
        match self {
            SolutionNet::Dense(n) => n,
            SolutionNet::Rbf(h) => &h.net,
        }
    }

    pub fn dense_mut(&mut self) -> &mut DenseNetwork {
        match self {
            SolutionNet::Dense(n) => n,
            SolutionNet::Rbf(h) => &mut h.net,
        }
    }

    /// Whether the network reads the parameter vector.
    pub fn is_parametric(&self, x_dim: usize) -> bool {
        match self {
            SolutionNet::Dense(n) => n.input_dim() > x_dim,
            SolutionNet::Rbf(_) => true,
        }
    }

    /// Jets at the points `xs[i]` with parameters `thetas[i]`.
    pub fn jets(
        &self,
        xs: &[&[f64]],
        thetas: &[&[f64]],
        coords: &[usize],
    ) -> Result<(NetPass, Vec<Jet>)> {
        match self {
            SolutionNet::Dense(net) => {
                let rows = input_rows(net.input_dim(), xs, thetas)?;
                let fwd = net.forward(&rows, coords)?;
                let jets = (0..xs.len()).map(|p| fwd.jet(0, p)).collect();
                Ok((
                    NetPass {
                        fwd,
                        points: vec![],
                        coords: coords.to_vec(),
                    },
                    jets,
                ))
            }
            SolutionNet::Rbf(head) => {
                let p = head.net.input_dim();
                let mut rows = Array2::zeros((xs.len(), p));
                let mut points = Vec::with_capacity(xs.len());
                for (i, (x, th)) in xs.iter().zip(thetas).enumerate() {
                    if x.len() != 2 || th.len() != p {
                        return Err(Error::Shape(
                            "RBF head needs 2-D points and a full parameter vector".into(),
                        ));
                    }
                    for (j, v) in th.iter().enumerate() {
                        rows[[i, j]] = *v;
                    }
                    points.push([x[0], x[1]]);
                }
                let (fwd, jets) = head.forward(&rows, &points, coords)?;
                Ok((
                    NetPass {
                        fwd,
                        points,
                        coords: coords.to_vec(),
                    },
                    jets,
                ))
            }
        }
    }

    /// Parameter gradient given one jet adjoint per point of `pass`.
    pub fn backward(&self, pass: &NetPass, seeds: &[Jet]) -> Result<Vec<f64>> {
        match self {
            SolutionNet::Dense(net) => {
                let mut s: Seeds = pass.fwd.seeds();
                for (p, seed) in seeds.iter().enumerate() {
                    *s.value_mut(0, p) = seed.value;
                    for k in 0..pass.coords.len() {
                        *s.grad_mut(0, k, p) = seed.grad[k];
                        *s.hess_mut(0, k, p) = seed.hess_diag[k];
                    }
                }
                net.backward(&pass.fwd, &s)
            }
            SolutionNet::Rbf(head) => head.backward(&pass.fwd, &pass.points, &pass.coords, seeds),
        }
    }
}

/// The trained networks of a surrogate.
#[derive(Clone, Debug, PartialEq)]
pub enum Networks {
    Pde(SolutionNet),
    /// `integrator` has two outputs `(N0, N1)` when it uses the square-root
    /// ansatz `w = N0 + sqrt(x - y) N1` for a singular diagonal.
    Integral {
        solution: DenseNetwork,
        integrator: DenseNetwork,
    },
}

impl Networks {
    pub fn param_count(&self) -> usize {
        match self {
            Networks::Pde(n) => n.param_count(),
            Networks::Integral {
                solution,
                integrator,
            } => solution.param_count() + integrator.param_count(),
        }
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Networks::Pde(n) => n.param_blocks_mut(),
            Networks::Integral {
                solution,
                integrator,
            } => {
                let mut b = solution.param_blocks_mut();
                b.extend(integrator.param_blocks_mut());
                b
            }
        }
    }
}

/// A trained (parametric) solution together with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateModel {
    pub problem_id: String,
    pub networks: Networks,
    pub domain: DomainBox,
    pub param_domain: DomainBox,
    pub final_loss: f64,
    pub iterations: usize,
    pub seed: u64,
    pub train_config: TrainConfig,
}

const ROLE_SOLUTION: &str = "solution";
const ROLE_INTEGRATOR: &str = "integrator";

fn meta_field<T: serde::de::DeserializeOwned>(ck: &Checkpoint, key: &str) -> Result<T> {
    let v = ck
        .meta(key)
        .ok_or_else(|| Error::Config(format!("checkpoint is missing `{key}`")))?;
    Ok(serde_json::from_value(v.clone())?)
}

impl SurrogateModel {
    pub fn x_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn param_dim(&self) -> usize {
        self.param_domain.dim()
    }

    pub fn is_integral(&self) -> bool {
        matches!(self.networks, Networks::Integral { .. })
    }

    fn check(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!(
                "point {x:?} outside the surrogate domain {:?}..{:?}",
                self.domain.lower, self.domain.upper
            )));
        }
        if !self.param_domain.contains(theta) {
            return Err(Error::Domain(format!(
                "parameter {theta:?} outside the surrogate parameter box"
            )));
        }
        Ok(())
    }

    /// Solution value `u(x | theta)`.
    pub fn value(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        Ok(self.values(&[x.to_vec()], theta)?[0])
    }

    /// Solution values at several points for one parameter vector.
    pub fn values(&self, xs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
        for x in xs {
            self.check(x, theta)?;
        }
        let net = match &self.networks {
            Networks::Pde(SolutionNet::Rbf(head)) => {
                let exp = head.expansion(theta)?;
                return Ok(xs.iter().map(|x| exp.value([x[0], x[1]])).collect());
            }
            Networks::Pde(SolutionNet::Dense(net)) => net,
            Networks::Integral { solution, .. } => solution,
        };
        let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let tr: Vec<&[f64]> = vec![theta; xs.len()];
        let rows = input_rows(net.input_dim(), &xr, &tr)?;
        let fwd = net.forward(&rows, &[])?;
        Ok((0..xs.len()).map(|p| fwd.value(0, p)).collect())
    }

    /// Jet of the solution at `x` over the listed domain coordinates.
    pub fn jet(&self, x: &[f64], theta: &[f64], coords: &[usize]) -> Result<Jet> {
        self.check(x, theta)?;
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.x_dim()) {
            return Err(Error::Shape(format!("coordinate {bad} is not a domain coordinate")));
        }
        match &self.networks {
            Networks::Pde(SolutionNet::Rbf(head)) => {
                Ok(rbf_eval(&head.expansion(theta)?, [x[0], x[1]], coords))
            }
            Networks::Pde(SolutionNet::Dense(net)) | Networks::Integral { solution: net, .. } => {
                let rows = input_rows(net.input_dim(), &[x], &[theta])?;
                Ok(net.forward(&rows, coords)?.jet(0, 0))
            }
        }
    }

    /// Integrator network `w(x, y | theta)`; `None` for PDE surrogates.
    pub fn integrator_value(&self, x: f64, y: f64, theta: &[f64]) -> Result<Option<f64>> {
        let Networks::Integral { integrator, .. } = &self.networks else {
            return Ok(None);
        };
        let point = [x, y];
        let rows = input_rows(integrator.input_dim(), &[&point], &[theta])?;
        let fwd = integrator.forward(&rows, &[])?;
        let mut w = fwd.value(0, 0);
        if integrator.output_dim() == 2 {
            w += (x - y).max(0.0).sqrt() * fwd.value(1, 0);
        }
        Ok(Some(w))
    }

    fn annotate(&self, ck: Checkpoint, role: &str) -> Checkpoint {
        ck.with_meta("role", json!(role))
            .with_meta("problem_id", json!(self.problem_id))
            .with_meta("domain", json!(self.domain))
            .with_meta("param_domain", json!(self.param_domain))
            .with_meta("train_config", json!(self.train_config))
            .with_meta("final_loss", json!(self.final_loss))
            .with_meta("iterations", json!(self.iterations))
            .with_meta("seed", json!(self.seed))
    }

    /// Checkpoints with their roles: one for PDE surrogates, two for integral ones.
    pub fn checkpoints(&self) -> Vec<(String, Checkpoint)> {
        match &self.networks {
            Networks::Pde(SolutionNet::Dense(net)) => vec![(
                ROLE_SOLUTION.into(),
                self.annotate(Checkpoint::from_network(net), ROLE_SOLUTION),
            )],
            Networks::Pde(SolutionNet::Rbf(head)) => {
                let ck = self
                    .annotate(Checkpoint::from_network(&head.net), ROLE_SOLUTION)
                    .with_meta(
                        "rbf",
                        json!({"bases": head.bases, "lower": head.lower, "upper": head.upper}),
                    );
                vec![(ROLE_SOLUTION.into(), ck)]
            }
            Networks::Integral {
                solution,
                integrator,
            } => vec![
                (
                    ROLE_SOLUTION.into(),
                    self.annotate(Checkpoint::from_network(solution), ROLE_SOLUTION),
                ),
                (
                    ROLE_INTEGRATOR.into(),
                    self.annotate(Checkpoint::from_network(integrator), ROLE_INTEGRATOR),
                ),
            ],
        }
    }

    /// Rebuild a surrogate from the checkpoints written by [`Self::checkpoints`].
    pub fn from_checkpoints(solution: &Checkpoint, integrator: Option<&Checkpoint>) -> Result<Self> {
        let problem_id: String = meta_field(solution, "problem_id")?;
        let net = solution.to_network()?;
        let networks = match (integrator, solution.meta("rbf")) {
            (Some(ick), _) => {
                let other: String = meta_field(ick, "problem_id")?;
                if other != problem_id {
                    return Err(Error::Config(format!(
                        "integrator checkpoint belongs to `{other}`, solution to `{problem_id}`"
                    )));
                }
                Networks::Integral {
                    solution: net,
                    integrator: ick.to_network()?,
                }
            }
            (None, Some(rbf)) => {
                let bases = rbf["bases"]
                    .as_u64()
                    .ok_or_else(|| Error::Config("rbf.bases must be an integer".into()))?;
                let lower: [f64; 2] = serde_json::from_value(rbf["lower"].clone())?;
                let upper: [f64; 2] = serde_json::from_value(rbf["upper"].clone())?;
                Networks::Pde(SolutionNet::Rbf(RbfHead::new(net, bases as usize, lower, upper)?))
            }
            (None, None) => Networks::Pde(SolutionNet::Dense(net)),
        };
        Ok(SurrogateModel {
            problem_id,
            networks,
            domain: meta_field(solution, "domain")?,
            param_domain: meta_field(solution, "param_domain")?,
            final_loss: meta_field(solution, "final_loss")?,
            iterations: meta_field(solution, "iterations")?,
            seed: meta_field(solution, "seed")?,
            train_config: meta_field(solution, "train_config")?,
        })
    }
}

impl From<&SurrogateModel> for Value {
    fn from(m: &SurrogateModel) -> Value {
        json!({
            "problem_id": m.problem_id,
            "final_loss": m.final_loss,
            "iterations": m.iterations,
            "seed": m.seed,
        })
    }
}
