use deepsurrogate::nn::rbf::{expansion_from_raw, raw_adjoint, RAW_PER_BASIS};
use deepsurrogate::nn::{init_dense, rbf_eval, Activation, Checkpoint, Jet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOWER: [f64; 2] = [0.0, 0.0];
const UPPER: [f64; 2] = [4.0, 2.0];

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    (1usize..8, prop::collection::vec(1usize..10, 1..4)).prop_map(|(d, hidden)| {
        let mut v = vec![d];
        v.extend(hidden);
        v.push(1);
        v
    })
}

fn point(seed: u64, d: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn random_raw(seed: u64, bases: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..bases * RAW_PER_BASIS).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #[test]
    fn jet_value_equals_plain_eval(dims in dims_strategy(), seed in any::<u64>()) {
        let net = init_dense(&dims, seed).unwrap();
        let x = point(seed ^ 1, dims[0]);
        let coords: Vec<usize> = (0..dims[0]).collect();
        let jet = net.eval_jet(&x, &coords).unwrap();
        prop_assert_eq!(jet.value.to_bits(), net.eval(&x).unwrap()[0].to_bits());
    }

    #[test]
    fn identity_activation_has_no_curvature(dims in dims_strategy(), seed in any::<u64>()) {
        let net = init_dense(&dims, seed).unwrap().with_activation(Activation::Identity);
        let x = point(seed ^ 2, dims[0]);
        let coords: Vec<usize> = (0..dims[0]).collect();
        let jet = net.eval_jet(&x, &coords).unwrap();
        prop_assert!(jet.hess_diag.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn checkpoint_round_trip_is_exact(dims in dims_strategy(), seed in any::<u64>()) {
        let net = init_dense(&dims, seed).unwrap();
        let text = Checkpoint::from_network(&net).to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap().to_network().unwrap();
        prop_assert_eq!(&back, &net);
        let x = point(seed ^ 3, dims[0]);
        prop_assert_eq!(back.eval(&x).unwrap()[0].to_bits(), net.eval(&x).unwrap()[0].to_bits());
    }

    #[test]
    fn rbf_scales_stay_positive(raw in prop::collection::vec(-800.0f64..50.0, RAW_PER_BASIS * 3)) {
        let exp = expansion_from_raw(&raw, LOWER, UPPER);
        prop_assert!(exp.bases.iter().all(|b| b.scale[0] > 0.0 && b.scale[1] > 0.0));
    }
}

#[test]
fn rbf_jet_matches_finite_differences() {
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let exp = expansion_from_raw(&random_raw(seed, 6), LOWER, UPPER);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let x = [rng.random_range(0.0..4.0), rng.random_range(0.0..2.0)];
        let jet = rbf_eval(&exp, x, &[0, 1]);
        assert_eq!(jet.value, exp.value(x));
        let (mut g, mut hs) = (vec![], vec![]);
        for k in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (exp.value(xp), exp.value(xm));
            g.push((fp - fm) / (2.0 * h));
            hs.push((fp - 2.0 * jet.value + fm) / (h * h));
        }
        worst = worst.max(rel_error(&jet.grad, &g)).max(rel_error(&jet.hess_diag, &hs));
    }
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
}

#[test]
fn rbf_raw_adjoint_matches_finite_differences() {
    let h = 1e-6;
    for seed in 0..20 {
        let raw = random_raw(seed, 4);
        let x = [1.3, 0.7];
        let coords = [0, 1];
        let seed_jet = Jet { value: 0.8, grad: vec![-0.4, 1.1], hess_diag: vec![0.3, -0.6] };
        let pairing = |jet: &Jet| {
            seed_jet.value * jet.value
                + seed_jet.grad.iter().zip(&jet.grad).map(|(a, b)| a * b).sum::<f64>()
                + seed_jet.hess_diag.iter().zip(&jet.hess_diag).map(|(a, b)| a * b).sum::<f64>()
        };
        let loss = |r: &[f64]| pairing(&rbf_eval(&expansion_from_raw(r, LOWER, UPPER), x, &coords));
        let mut adj = vec![0.0; raw.len()];
        raw_adjoint(&raw, LOWER, UPPER, x, &coords, &seed_jet, &mut adj);
        let fd: Vec<f64> = (0..raw.len())
            .map(|i| {
                let (mut up, mut down) = (raw.clone(), raw.clone());
                up[i] += h;
                down[i] -= h;
                (loss(&up) - loss(&down)) / (2.0 * h)
            })
            .collect();
        let err = rel_error(&adj, &fd);
        assert!(err <= 1e-6, "seed {seed}: relative error {err:e}");
    }
}
