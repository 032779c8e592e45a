use std::sync::Arc;

use deepsurrogate::nn::{init_dense, DenseNetwork, Jet};
use deepsurrogate::problems::benchmarks::second_kind_exponential;
use deepsurrogate::problems::fin::{fin_log_solution, fin_problem};
use deepsurrogate::problems::integral::{FixedKernel, FixedSource};
use deepsurrogate::problems::{
    biot_eval, biot_prior_domain, voltammetry_pde, Dataset, DomainBox, EquationKind,
    IntegralProblem, LossWeights, PdeProblem, UpperLimit,
};
use deepsurrogate::trainer::{
    augmented_loss, build_networks, integral_loss, parametric_pde_loss, pde_loss,
    sample_integral_batch, sample_pde_batch, train, validation_loss, BoundaryPoint,
    CollocationBatch, Networks, Problem, SolutionNet, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const A: f64 = 0.1;
const UA: f64 = 1.0;
const U1: f64 = 0.5;

fn fin(theta_domain: DomainBox) -> PdeProblem {
    fin_problem(theta_domain, A, UA, U1).unwrap()
}

fn theta_draw(seed: u64) -> Vec<f64> {
    biot_prior_domain().sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn zeroed(dims: &[usize]) -> DenseNetwork {
    let mut net = init_dense(dims, 0).unwrap();
    net.set_params(&vec![0.0; net.param_count()]).unwrap();
    net
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn flat(nets: &Networks) -> Vec<f64> {
    let mut n = nets.clone();
    n.param_blocks_mut().iter().flat_map(|b| b.to_vec()).collect()
}

#[test]
fn fin_log_solution_has_zero_residual() {
    let p = fin(DomainBox::point(&[0.0; 16]));
    let theta = [0.0; 16];
    for i in 0..=20 {
        let x = A + (1.0 - A) * i as f64 / 20.0;
        let (u, du, d2u) = fin_log_solution(x, A, UA, U1);
        let jet = Jet { value: u, grad: vec![du], hess_diag: vec![d2u] };
        assert!(p.residual_value(&[x], &jet, &theta).powi(2) <= 1e-20);
    }
    assert_eq!(p.boundary_value(0, &[A], &theta), UA);
    assert_eq!(p.boundary_value(1, &[1.0], &theta), U1);
    assert!((fin_log_solution(A, A, UA, U1).0 - UA).abs() < 1e-15);
    assert!((fin_log_solution(1.0, A, UA, U1).0 - U1).abs() < 1e-15);
}

#[test]
fn two_point_pde_loss_matches_hand_sum() {
    let theta = theta_draw(3);
    let p = fin(biot_prior_domain());
    let net = init_dense(&[1, 4, 1], 9).unwrap();
    let batch = CollocationBatch {
        interior: vec![vec![0.3], vec![0.8]],
        interior_theta: vec![theta.clone(); 2],
        boundary: vec![
            BoundaryPoint { segment: 0, x: vec![A], theta: theta.clone() },
            BoundaryPoint { segment: 1, x: vec![1.0], theta: theta.clone() },
        ],
        pairs: vec![],
    };
    let w = LossWeights::new([0.7, 1.3, 1.0, 1.0]).unwrap();
    let loss = pde_loss(&SolutionNet::Dense(net.clone()), &p, &theta, &batch, &w).unwrap();

    let r = |x: f64| {
        let j = net.eval_jet(&[x], &[0]).unwrap();
        j.hess_diag[0] + j.grad[0] / x - biot_eval(&theta, x) * j.value
    };
    let u = |x: f64| net.eval(&[x]).unwrap()[0];
    let hand = 0.7 * (r(0.3).powi(2) + r(0.8).powi(2)) / 2.0
        + 1.3 * ((u(A) - UA).powi(2) + (u(1.0) - U1).powi(2)) / 2.0;
    assert!(close(loss, hand, 1e-14), "{loss} vs {hand}");
}

#[test]
fn zero_network_on_voltammetry_pays_only_boundary_terms() {
    let p = voltammetry_pde(DomainBox::interval(-6.0, 6.0).unwrap(), -10.0);
    let theta = [1.5];
    let net = SolutionNet::Dense(zeroed(&[3, 8, 1]));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batch = sample_pde_batch(&p, 64, 48, &mut rng);
    let w = LossWeights::default();
    let loss = pde_loss(&net, &p, &theta, &batch, &w).unwrap();
    let boundary: f64 = batch
        .boundary
        .iter()
        .map(|b| p.boundaries[b.segment].weight * p.boundary_value(b.segment, &b.x, &theta).powi(2))
        .sum::<f64>()
        / batch.boundary.len() as f64;
    assert!(close(loss, boundary, 1e-14), "{loss} vs {boundary}");

    let only_interior = LossWeights::new([1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(pde_loss(&net, &p, &theta, &batch, &only_interior).unwrap(), 0.0);
}

#[test]
fn collapsed_parameter_box_matches_fixed_loss_exactly() {
    let theta = theta_draw(5);
    let p = fin(DomainBox::point(&theta));
    let net = SolutionNet::Dense(init_dense(&[17, 8, 1], 2).unwrap());
    let batch = sample_pde_batch(&p, 16, 4, &mut ChaCha8Rng::seed_from_u64(6));
    let w = LossWeights::default();
    let fixed = pde_loss(&net, &p, &theta, &batch, &w).unwrap();
    let param = parametric_pde_loss(&net, &p, &batch, &w).unwrap();
    assert_eq!(fixed.to_bits(), param.to_bits());
}

#[test]
fn network_blind_to_theta_averages_fixed_losses() {
    let p = fin(biot_prior_domain());
    let mut wide = init_dense(&[17, 6, 1], 8).unwrap();
    let mut narrow = init_dense(&[1, 6, 1], 0).unwrap();
    {
        let first = &mut wide.layers_mut()[0];
        for o in 0..6 {
            for i in 1..17 {
                first.weights[[o, i]] = 0.0;
            }
        }
    }
    for (n, w) in narrow.layers_mut().iter_mut().zip(wide.layers()) {
        n.bias.assign(&w.bias);
        let cols = n.weights.ncols();
        n.weights.assign(&w.weights.slice(ndarray::s![.., ..cols]));
    }
    let batch = sample_pde_batch(&p, 12, 6, &mut ChaCha8Rng::seed_from_u64(10));
    let w = LossWeights::default();
    let param = parametric_pde_loss(&SolutionNet::Dense(wide), &p, &batch, &w).unwrap();

    let narrow = SolutionNet::Dense(narrow);
    let mean: f64 = (0..batch.len())
        .map(|i| {
            let one = CollocationBatch {
                interior: vec![batch.interior[i].clone()],
                interior_theta: vec![batch.interior_theta[i].clone()],
                boundary: batch.boundary.clone(),
                pairs: vec![],
            };
            pde_loss(&narrow, &p, &batch.interior_theta[i], &one, &w).unwrap()
        })
        .sum::<f64>()
        / batch.len() as f64;
    assert!(close(param, mean, 1e-12), "{param} vs {mean}");
}

#[test]
fn loss_is_invariant_under_batch_permutation() {
    let p = fin(biot_prior_domain());
    let net = SolutionNet::Dense(init_dense(&[17, 8, 1], 3).unwrap());
    let batch = sample_pde_batch(&p, 40, 10, &mut ChaCha8Rng::seed_from_u64(11));
    let mut shuffled = batch.clone();
    shuffled.interior.reverse();
    shuffled.interior_theta.reverse();
    shuffled.boundary.reverse();
    let w = LossWeights::default();
    let a = parametric_pde_loss(&net, &p, &batch, &w).unwrap();
    let b = parametric_pde_loss(&net, &p, &shuffled, &w).unwrap();
    assert!(close(a, b, 1e-14), "{a} vs {b}");
}

#[test]
fn scaling_weights_scales_loss() {
    let p = fin(biot_prior_domain());
    let net = SolutionNet::Dense(init_dense(&[17, 8, 1], 4).unwrap());
    let batch = sample_pde_batch(&p, 20, 8, &mut ChaCha8Rng::seed_from_u64(12));
    let w = LossWeights::new([0.3, 2.0, 1.0, 1.0]).unwrap();
    let base = parametric_pde_loss(&net, &p, &batch, &w).unwrap();
    let four = parametric_pde_loss(&net, &p, &batch, &w.scaled(4.0)).unwrap();
    assert_eq!(four, 4.0 * base);
    let odd = parametric_pde_loss(&net, &p, &batch, &w.scaled(2.7)).unwrap();
    assert!(close(odd, 2.7 * base, 1e-14));
}

#[test]
fn decoupled_second_kind_loss_is_zero() {
    let p = IntegralProblem::new(
        "decoupled",
        EquationKind::Second,
        UpperLimit::Volterra,
        0.0,
        1.0,
        Arc::new(FixedSource(|_| 0.7)),
        Arc::new(FixedKernel(|_, _| 0.0)),
        DomainBox::empty(),
    )
    .unwrap();
    let mut u = zeroed(&[1, 4, 1]);
    u.layers_mut()[1].bias[0] = 0.7;
    let w = zeroed(&[2, 4, 1]);
    let batch = sample_integral_batch(&p, 64, &mut ChaCha8Rng::seed_from_u64(13));
    assert_eq!(integral_loss(&u, &w, &p, &batch, &LossWeights::default()).unwrap(), 0.0);
}

#[test]
fn augmented_loss_adds_mean_data_mismatch() {
    let theta = theta_draw(7);
    let p = fin(biot_prior_domain());
    let net = init_dense(&[1, 5, 1], 14).unwrap();
    let nets = Networks::Pde(SolutionNet::Dense(net.clone()));
    let batch = sample_pde_batch(&p, 16, 4, &mut ChaCha8Rng::seed_from_u64(15));
    let w = LossWeights::new([1.0, 1.0, 0.8, 1.0]).unwrap();
    let base = pde_loss(&SolutionNet::Dense(net.clone()), &p, &theta, &batch, &w).unwrap();
    let problem = Problem::Pde(p);
    let u = |x: f64| net.eval(&[x]).unwrap()[0];

    let exact = Dataset::scalar(&[0.5], &[u(0.5)]).unwrap();
    assert_eq!(augmented_loss(&nets, &problem, &theta, &batch, &exact, &w).unwrap(), base);

    let (d1, d2) = (0.01, -0.03);
    let off = Dataset::scalar(&[0.4, 0.9], &[u(0.4) + d1, u(0.9) + d2]).unwrap();
    let got = augmented_loss(&nets, &problem, &theta, &batch, &off, &w).unwrap();
    let want = base + 0.8 * (d1 * d1 + d2 * d2) / 2.0;
    assert!(close(got, want, 1e-13), "{got} vs {want}");
}

#[test]
fn pde_batches_are_uniform_and_reproducible() {
    let p = voltammetry_pde(DomainBox::interval(-6.0, 6.0).unwrap(), -10.0);
    let n = 100_000;
    let batch = sample_pde_batch(&p, n, 0, &mut ChaCha8Rng::seed_from_u64(16));
    for (coord, width) in [(0, 200.0), (1, 20.0)] {
        let mean = batch.interior.iter().map(|x| x[coord]).sum::<f64>() / n as f64;
        let se = width / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - width / 2.0).abs() < 3.0 * se, "coord {coord}: mean {mean}");
    }
    let again = sample_pde_batch(&p, n, 0, &mut ChaCha8Rng::seed_from_u64(16));
    assert_eq!(batch, again);
}

#[test]
fn volterra_pairs_stay_below_the_diagonal() {
    let p = second_kind_exponential();
    let batch = sample_integral_batch(&p, 100_000, &mut ChaCha8Rng::seed_from_u64(17));
    assert!(batch.pairs.iter().zip(&batch.interior).all(|(y, x)| *y <= x[0] && *y >= 0.0));
}

fn small_config(iterations: usize) -> TrainConfig {
    TrainConfig {
        interior_points: 32,
        iterations,
        hidden: vec![8],
        parametric: false,
        learning_rate: 3e-3,
        seed: 21,
        ..TrainConfig::default()
    }
}

#[test]
fn one_iteration_is_one_adam_step() {
    let problem = Problem::Integral(second_kind_exponential());
    let cfg = small_config(1);
    let before = flat(&build_networks(&problem, &cfg).unwrap());
    let run = train(&problem, &cfg).unwrap();
    assert_eq!(run.model.iterations, 1);
    let after = flat(&run.model.networks);
    let steps: Vec<f64> = before.iter().zip(&after).map(|(b, a)| (a - b).abs()).collect();
    let lr = cfg.learning_rate;
    assert!(steps.iter().all(|&s| s <= lr * (1.0 + 1e-9)));
    assert!(steps.iter().cloned().fold(0.0, f64::max) > 0.99 * lr);
}

#[test]
fn training_is_deterministic() {
    let problem = Problem::Integral(second_kind_exponential());
    let a = train(&problem, &small_config(50)).unwrap();
    let b = train(&problem, &small_config(50)).unwrap();
    assert_eq!(a.model.final_loss.to_bits(), b.model.final_loss.to_bits());
    assert_eq!(flat(&a.model.networks), flat(&b.model.networks));
    let c = train(&problem, &TrainConfig { seed: 22, ..small_config(50) }).unwrap();
    assert_ne!(a.model.final_loss, c.model.final_loss);
}

#[test]
fn validation_loss_drops_tenfold() {
    let problem = Problem::Integral(second_kind_exponential());
    let start = train(&problem, &small_config(1)).unwrap();
    let end = train(&problem, &small_config(3000)).unwrap();
    let v0 = validation_loss(&start.model, &problem, 10_000, 99).unwrap();
    let v1 = validation_loss(&end.model, &problem, 10_000, 99).unwrap();
    assert!(v1 * 10.0 <= v0, "{v0} -> {v1}");
}

#[test]
fn loss_threshold_stops_early() {
    let problem = Problem::Integral(second_kind_exponential());
    let cfg = TrainConfig { loss_threshold: 1e9, ..small_config(500) };
    assert_eq!(train(&problem, &cfg).unwrap().model.iterations, 100);
}

#[test]
fn non_finite_loss_reports_divergence() {
    let p = IntegralProblem::new(
        "poisoned",
        EquationKind::Second,
        UpperLimit::Volterra,
        0.0,
        1.0,
        Arc::new(FixedSource(|_| f64::NAN)),
        Arc::new(FixedKernel(|_, _| 1.0)),
        DomainBox::empty(),
    )
    .unwrap();
    let err = train(&Problem::Integral(p), &small_config(5)).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}

#[test]
fn zero_iterations_is_a_config_error() {
    let problem = Problem::Integral(second_kind_exponential());
    assert!(train(&problem, &small_config(0)).is_err());
}
