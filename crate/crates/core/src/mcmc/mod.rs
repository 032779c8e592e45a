//! Surrogate-likelihood Bayesian inference with random-walk Metropolis-Hastings.

pub mod chain;
pub mod stats;

pub use chain::{adapt_proposals, mh_step, run_chains, sample_chain, samples_csv, Chain, State};
pub use stats::{function_band, kde, quantile, silverman_bandwidth, split_rhat, summarize, Band, Summary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Dataset, DomainBox};
use crate::trainer::SurrogateModel;

/// Forward map from parameters to predicted observations.
pub trait ForwardModel: Sync {
    fn param_dim(&self) -> usize;
    fn predict(&self, inputs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>>;
}

impl ForwardModel for SurrogateModel {
    fn param_dim(&self) -> usize {
        SurrogateModel::param_dim(self)
    }
    fn predict(&self, inputs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
        self.values(inputs, theta)
    }
}

/// Electrode current of a voltammetry PDE surrogate; inputs are times.
pub struct CurrentModel<'a>(pub &'a SurrogateModel);

impl ForwardModel for CurrentModel<'_> {
    fn param_dim(&self) -> usize {
        self.0.param_dim()
    }
    fn predict(&self, inputs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
        inputs
            .iter()
            .map(|t| crate::reference::surrogate_current(self.0, t[0], theta))
            .collect()
    }
}

/// Sampler settings and priors. Samples are `(theta_0, ..., theta_{p-1}, sigma)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSpec {
    pub theta_prior: DomainBox,
    pub sigma_prior: [f64; 2],
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    /// One scale per sampled coordinate, sigma last.
    pub initial_scales: Vec<f64>,
    pub adapt_interval: usize,
    pub target_acceptance: f64,
    pub seed: u64,
}

impl InferenceSpec {
    /// Defaults for a parameter box: 10 chains, 50,000 iterations, a fifth of
    /// them burn-in, proposal scales at 5% of each prior width.
    pub fn new(theta_prior: DomainBox, sigma_prior: [f64; 2]) -> Self {
        let mut initial_scales: Vec<f64> =
            (0..theta_prior.dim()).map(|i| 0.05 * theta_prior.width(i)).collect();
        initial_scales.push(0.05 * (sigma_prior[1] - sigma_prior[0]));
        InferenceSpec {
            theta_prior,
            sigma_prior,
            chains: 10,
            iterations: 50_000,
            burn_in: 10_000,
            initial_scales,
            adapt_interval: 100,
            target_acceptance: 0.4,
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta_prior.dim() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.sigma_prior;
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!("sigma prior [{lo}, {hi}] must satisfy 0 <= lo < hi")));
        }
        if self.theta_prior.lower.len() != self.theta_prior.upper.len()
            || (0..self.theta_prior.dim()).any(|i| !(self.theta_prior.width(i) >= 0.0))
        {
            return Err(Error::Config("theta prior box is malformed".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.chains == 0 {
            return Err(Error::Config("need at least one chain".into()));
        }
        if self.adapt_interval == 0 {
            return Err(Error::Config("adaptation interval must be positive".into()));
        }
        if self.initial_scales.len() != self.dim()
            || self.initial_scales.iter().any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::Config(format!(
                "need {} non-negative proposal scales",
                self.dim()
            )));
        }
        if !(0.0..=1.0).contains(&self.target_acceptance) {
            return Err(Error::Config("target acceptance must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Closed-box membership of a sampled point.
    pub fn in_prior(&self, point: &[f64]) -> bool {
        let p = self.theta_prior.dim();
        point.len() == p + 1
            && self.theta_prior.contains(&point[..p])
            && point[p] >= self.sigma_prior[0]
            && point[p] <= self.sigma_prior[1]
    }
}

/// Gaussian log-likelihood of the data under `model(theta)` with noise `sigma`.
pub fn log_likelihood<M: ForwardModel + ?Sized>(
    model: &M,
    data: &Dataset,
    theta: &[f64],
    sigma: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict(&data.inputs, theta)?;
    let ss: f64 = pred
        .iter()
        .zip(&data.responses)
        .map(|(u, z)| (z - u) * (z - u))
        .sum();
    let m = data.len() as f64;
    Ok(-0.5 * m * (2.0 * std::f64::consts::PI * sigma * sigma).ln() - ss / (2.0 * sigma * sigma))
}

/// 0 inside the closed prior boxes, `-inf` outside.
pub fn log_prior(theta: &[f64], sigma: f64, spec: &InferenceSpec) -> f64 {
    let mut point = theta.to_vec();
    point.push(sigma);
    if spec.in_prior(&point) {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Unnormalised log-posterior of a sampled point `(theta, sigma)`.
pub fn log_posterior<M: ForwardModel + ?Sized>(
    model: &M,
    data: &Dataset,
    spec: &InferenceSpec,
    point: &[f64],
) -> Result<f64> {
    let p = spec.theta_prior.dim();
    let prior = log_prior(&point[..p], point[p], spec);
    if prior == f64::NEG_INFINITY {
        return Ok(prior);
    }
    Ok(prior + log_likelihood(model, data, &point[..p], point[p])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `u(x | theta) = theta_0` everywhere.
    pub(crate) struct Constant;

    impl ForwardModel for Constant {
        fn param_dim(&self) -> usize {
            1
        }
        fn predict(&self, inputs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![theta[0]; inputs.len()])
        }
    }

    fn spec() -> InferenceSpec {
        InferenceSpec::new(DomainBox::interval(-6.0, 6.0).unwrap(), [0.0, 3.0])
    }

    #[test]
    fn likelihood_trivial_cases() {
        let empty = Dataset::new(vec![], vec![]).unwrap();
        assert_eq!(log_likelihood(&Constant, &empty, &[1.0], 0.5).unwrap(), 0.0);
        let one = Dataset::scalar(&[0.3], &[2.0]).unwrap();
        let ll = log_likelihood(&Constant, &one, &[2.0], 1.0).unwrap();
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert_eq!(log_likelihood(&Constant, &one, &[2.0], 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn likelihood_hand_sum() {
        let d = Dataset::scalar(&[0.0, 1.0, 2.0], &[1.0, 1.5, 0.25]).unwrap();
        let (theta, s) = (0.75, 0.4);
        let ss = 0.25f64.powi(2) + 0.75f64.powi(2) + 0.5f64.powi(2);
        let want = -1.5 * (2.0 * std::f64::consts::PI * s * s).ln() - ss / (2.0 * s * s);
        let got = log_likelihood(&Constant, &d, &[theta], s).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn prior_is_closed_box() {
        let s = spec();
        assert_eq!(log_prior(&[0.0], 1.5, &s), 0.0);
        assert_eq!(log_prior(&[6.0], 3.0, &s), 0.0);
        assert_eq!(log_prior(&[0.0], 3.0 + 1e-12, &s), f64::NEG_INFINITY);
        assert_eq!(log_prior(&[-6.1], 1.0, &s), f64::NEG_INFINITY);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        assert!(s.validate().is_ok());
        s.burn_in = s.iterations;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = spec();
        s.sigma_prior = [-1.0, 3.0];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.initial_scales.pop();
        assert!(s.validate().is_err());
    }
}
