use deepsurrogate::mcmc::*;
use deepsurrogate::problems::{Dataset, DomainBox};
use deepsurrogate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian_spec(iterations: usize, burn_in: usize) -> InferenceSpec {
    let mut s = InferenceSpec::new(DomainBox::empty(), [0.0, 1.0]);
    s.iterations = iterations;
    s.burn_in = burn_in;
    s.initial_scales = vec![5.0];
    s
}

fn gaussian_chain(seed: u64) -> Chain {
    let spec = gaussian_spec(110_000, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = State {
        point: vec![3.0],
        log_post: -4.5,
    };
    sample_chain(&mut |p| Ok(-0.5 * p[0] * p[0]), start, &spec, &mut rng, 0).unwrap()
}

#[test]
fn standard_normal_target_moments() {
    let c = gaussian_chain(2024);
    assert_eq!(c.len(), 100_000);
    let xs: Vec<f64> = c.iter().map(|p| p[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    assert!(mean.abs() <= 0.03, "mean {mean}");
    assert!((0.94..=1.06).contains(&var), "variance {var}");
}

#[test]
fn burn_in_adaptation_reaches_target_acceptance() {
    let c = gaussian_chain(7);
    let rate = c.acceptance_rate();
    assert!((rate - 0.4).abs() <= 0.05, "acceptance {rate}");
    assert!(c.final_scales[0] < 5.0);
}

/// `u(x | theta) = theta_0`.
struct Level;

impl ForwardModel for Level {
    fn param_dim(&self) -> usize {
        1
    }
    fn predict(&self, inputs: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![theta[0]; inputs.len()])
    }
}

#[test]
fn recovers_gaussian_mean_posterior() {
    // With sigma pinned to a narrow prior around 0.5, the posterior of theta is
    // close to N(mean(z), sigma^2 / M).
    let z = [1.2, 0.7, 1.0, 1.4, 0.9, 1.1, 0.6, 1.3];
    let data = Dataset::scalar(&[0.0; 8], &z).unwrap();
    let mut spec = InferenceSpec::new(DomainBox::interval(-5.0, 5.0).unwrap(), [0.4999, 0.5001]);
    spec.chains = 4;
    spec.iterations = 30_000;
    spec.burn_in = 5_000;
    let chains = run_chains(&Level, &data, &spec).unwrap();
    let s = summarize(&chains).unwrap();
    let zbar = z.iter().sum::<f64>() / z.len() as f64;
    let post_sd = 0.5 / (z.len() as f64).sqrt();
    // Monte-Carlo standard error with a generous autocorrelation allowance.
    let n_eff = chains.iter().map(Chain::len).sum::<usize>() as f64 / 10.0;
    let mcse = post_sd / n_eff.sqrt();
    assert!((s.means[0] - zbar).abs() <= 3.0 * mcse, "{} vs {zbar}", s.means[0]);
    assert!((s.stds[0] - post_sd).abs() < 0.1 * post_sd);
    for c in &chains {
        assert!(c.iter().all(|p| log_prior(&p[..1], p[1], &spec) == 0.0));
    }
}

#[test]
fn kde_of_large_normal_sample_peaks_near_density_maximum() {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let grid: Vec<f64> = (0..=200).map(|i| -4.0 + 0.04 * i as f64).collect();
    let d = kde(&xs, &grid).unwrap();
    let peak = d.iter().cloned().fold(0.0, f64::max);
    let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((peak - want).abs() < 0.1 * want);
}
