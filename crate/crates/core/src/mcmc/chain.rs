use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{log_posterior, ForwardModel, InferenceSpec};
use crate::problems::Dataset;

const MAX_INITIAL_DRAWS: usize = 1000;

/// Current point of a chain and its log-posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub point: Vec<f64>,
    pub log_post: f64,
}

/// Retained samples of one chain, stored row-major (`dim` values per sample).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub chain_id: usize,
    pub dim: usize,
    pub samples: Vec<f64>,
    /// Acceptance fraction of every adaptation window, burn-in included.
    pub window_acceptance: Vec<f64>,
    /// Accepted proposals after burn-in.
    pub accepted: usize,
    pub final_scales: Vec<f64>,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }

    /// Post-burn-in acceptance fraction.
    pub fn acceptance_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.accepted as f64 / self.len() as f64
        }
    }
}

/// One random-walk step: perturb every coordinate by `scale_i * z_i` and accept
/// with probability `min(1, exp(new - old))`.
pub fn mh_step<R: Rng + ?Sized>(
    state: &State,
    scales: &[f64],
    target: &mut dyn FnMut(&[f64]) -> Result<f64>,
    rng: &mut R,
) -> Result<(State, bool)> {
    let proposal: Vec<f64> = state
        .point
        .iter()
        .zip(scales)
        .map(|(x, s)| x + s * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let u: f64 = rng.random();
    let lp = target(&proposal)?;
    if lp.is_nan() {
        return Err(Error::Numerical(format!("log-posterior is NaN at {proposal:?}")));
    }
    if u < (lp - state.log_post).exp() {
        Ok((
            State {
                point: proposal,
                log_post: lp,
            },
            true,
        ))
    } else {
        Ok((state.clone(), false))
    }
}

/// `scale * exp(acc_rate - target)` per coordinate.
pub fn adapt_proposals(scales: &[f64], acc_rate: f64, target: f64) -> Vec<f64> {
    let f = (acc_rate - target).exp();
    scales.iter().map(|s| s * f).collect()
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn initial_point<R: Rng + ?Sized>(spec: &InferenceSpec, rng: &mut R) -> Vec<f64> {
    let mut point = spec.theta_prior.sample(rng);
    let [lo, hi] = spec.sigma_prior;
    point.push(lo + (hi - lo) * rng.random::<f64>());
    point
}

fn run_one<M: ForwardModel + ?Sized>(
    model: &M,
    data: &Dataset,
    spec: &InferenceSpec,
    chain_id: usize,
) -> Result<Chain> {
    let mut rng = chain_rng(spec.seed, chain_id);
    let mut target = |p: &[f64]| log_posterior(model, data, spec, p);
    let mut state = None;
    for _ in 0..MAX_INITIAL_DRAWS {
        let point = initial_point(spec, &mut rng);
        let lp = target(&point)?;
        if lp.is_finite() {
            state = Some(State { point, log_post: lp });
            break;
        }
    }
    let state = state.ok_or_else(|| {
        Error::Numerical(format!("chain {chain_id}: no initial point with finite posterior"))
    })?;
    sample_chain(&mut target, state, spec, &mut rng, chain_id)
}

/// Advance a chain from `start` for `spec.iterations` steps, adapting the
/// proposal scales during burn-in only. Any target density can be sampled;
/// the dimension is taken from `start`.
pub fn sample_chain<R: Rng + ?Sized>(
    target: &mut dyn FnMut(&[f64]) -> Result<f64>,
    start: State,
    spec: &InferenceSpec,
    rng: &mut R,
    chain_id: usize,
) -> Result<Chain> {
    let mut state = start;
    let dim = state.point.len();
    if spec.initial_scales.len() != dim {
        return Err(Error::Config(format!(
            "{} proposal scales for a {dim}-dimensional chain",
            spec.initial_scales.len()
        )));
    }
    let kept = spec.iterations - spec.burn_in;
    let mut scales = spec.initial_scales.clone();
    let mut samples = Vec::with_capacity(kept * dim);
    let mut window_acceptance = Vec::new();
    let (mut window_acc, mut window_len, mut accepted) = (0usize, 0usize, 0usize);
    for it in 0..spec.iterations {
        let (next, acc) = mh_step(&state, &scales, target, rng)?;
        state = next;
        window_acc += acc as usize;
        window_len += 1;
        if it >= spec.burn_in {
            accepted += acc as usize;
            samples.extend_from_slice(&state.point);
        }
        let window_done = window_len == spec.adapt_interval;
        if window_done || it + 1 == spec.burn_in || it + 1 == spec.iterations {
            let rate = window_acc as f64 / window_len as f64;
            window_acceptance.push(rate);
            if it < spec.burn_in {
                scales = adapt_proposals(&scales, rate, spec.target_acceptance);
            }
            window_acc = 0;
            window_len = 0;
        }
    }
    Ok(Chain {
        chain_id,
        dim,
        samples,
        window_acceptance,
        accepted,
        final_scales: scales,
        seed: spec.seed,
    })
}

/// Run `spec.chains` independent chains in parallel; chain `c` draws from stream
/// `c` of a generator seeded with `spec.seed`, so results do not depend on scheduling.
pub fn run_chains<M: ForwardModel + ?Sized>(
    model: &M,
    data: &Dataset,
    spec: &InferenceSpec,
) -> Result<Vec<Chain>> {
    spec.validate()?;
    if model.param_dim() != spec.theta_prior.dim() {
        return Err(Error::Shape(format!(
            "model has {} parameters, prior box has {}",
            model.param_dim(),
            spec.theta_prior.dim()
        )));
    }
    (0..spec.chains)
        .into_par_iter()
        .map(|c| run_one(model, data, spec, c))
        .collect()
}

/// One row per retained sample: `theta_0, ..., theta_{p-1}, sigma, chain_id`.
pub fn samples_csv(chains: &[Chain]) -> String {
    let mut out = String::new();
    if let Some(first) = chains.first() {
        let header: Vec<String> = (0..first.dim - 1)
            .map(|i| format!("theta_{i}"))
            .chain(["sigma".to_string(), "chain_id".to_string()])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for c in chains {
        for s in c.iter() {
            for v in s {
                out.push_str(&format!("{v:?},"));
            }
            out.push_str(&format!("{}\n", c.chain_id));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::tests::Constant;
    use crate::problems::DomainBox;

    fn spec(chains: usize, iterations: usize, burn_in: usize) -> InferenceSpec {
        let mut s = InferenceSpec::new(DomainBox::interval(-6.0, 6.0).unwrap(), [0.0, 3.0]);
        s.chains = chains;
        s.iterations = iterations;
        s.burn_in = burn_in;
        s
    }

    fn data() -> Dataset {
        Dataset::scalar(&[0.0, 1.0, 2.0, 3.0], &[0.9, 1.1, 1.0, 1.05]).unwrap()
    }

    #[test]
    fn zero_perturbation_is_accepted() {
        let s = State {
            point: vec![1.0, 2.0],
            log_post: -3.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (next, acc) = mh_step(&s, &[0.0, 0.0], &mut |_| Ok(-3.0), &mut rng).unwrap();
            assert!(acc);
            assert_eq!(next, s);
        }
    }

    #[test]
    fn exits_from_support_are_rejected() {
        let s = State {
            point: vec![0.0],
            log_post: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (next, acc) =
                mh_step(&s, &[1.0], &mut |_| Ok(f64::NEG_INFINITY), &mut rng).unwrap();
            assert!(!acc);
            assert_eq!(next, s);
        }
    }

    #[test]
    fn acceptance_invariant_under_constant_shift() {
        let run = |shift: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut state = State {
                point: vec![0.5],
                log_post: -0.125 + shift,
            };
            let mut flags = vec![];
            for _ in 0..2000 {
                let (next, acc) = mh_step(
                    &state,
                    &[1.5],
                    &mut |p| Ok(-0.5 * p[0] * p[0] + shift),
                    &mut rng,
                )
                .unwrap();
                state = next;
                flags.push(acc);
            }
            flags
        };
        assert_eq!(run(0.0), run(1000.0));
    }

    #[test]
    fn adaptation_direction() {
        assert_eq!(adapt_proposals(&[0.3, 2.0], 0.4, 0.4), vec![0.3, 2.0]);
        let grown = adapt_proposals(&[1.0], 1.0, 0.4);
        assert!(grown[0] > 1.0);
        assert!(adapt_proposals(&grown, 1.0, 0.4)[0] > grown[0]);
        assert!(adapt_proposals(&[1.0], 0.0, 0.4)[0] < 1.0);
    }

    #[test]
    fn bookkeeping() {
        let s = spec(1, 11, 10);
        let chains = run_chains(&Constant, &data(), &s).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].len(), 1);
        let csv = samples_csv(&chains);
        assert!(csv.starts_with("theta_0,sigma,chain_id\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn deterministic_and_inside_prior() {
        let s = spec(3, 400, 100);
        let a = run_chains(&Constant, &data(), &s).unwrap();
        assert_eq!(a, run_chains(&Constant, &data(), &s).unwrap());
        assert_ne!(a[0].samples, a[1].samples);
        for c in &a {
            assert_eq!(c.len(), 300);
            assert!(c.iter().all(|p| s.in_prior(p)));
            assert!((0.0..=1.0).contains(&c.acceptance_rate()));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = InferenceSpec::new(
            DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            [0.0, 1.0],
        );
        assert!(matches!(run_chains(&Constant, &data(), &s), Err(Error::Shape(_))));
    }
}
