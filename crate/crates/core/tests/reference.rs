use deepsurrogate::problems::{biot_eval, voltammetry_integral_on, DomainBox};
use deepsurrogate::reference::{
    gen_synthetic_data, solve_fin_fd, solve_fin_fd_with, solve_tridiagonal,
    solve_volterra_first_kind, Curve, ObservationPlacement,
};
use deepsurrogate::Result;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Flat(f64);

impl Curve for Flat {
    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn eval(&self, _: f64) -> Result<f64> {
        Ok(self.0)
    }
}

#[test]
fn voltammetry_reference_converges_under_step_halving() {
    let p = voltammetry_integral_on(DomainBox::interval(-6.0, 6.0).unwrap(), -10.0, 10.0).unwrap();
    let grids: Vec<_> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| solve_volterra_first_kind(&p, &[-4.0], dt).unwrap())
        .collect();
    let ts: Vec<f64> = (0..=100).map(|i| 0.1 + 9.8 * i as f64 / 100.0).collect();
    let gap = |a: usize, b: usize| {
        ts.iter()
            .map(|&t| (grids[a].value_at(t).unwrap() - grids[b].value_at(t).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (gap(0, 1), gap(1, 2));
    assert!(fine < coarse, "{coarse} -> {fine}");
    assert!(fine < 1e-2);
    let peak = grids[2].values.iter().cloned().fold(f64::MIN, f64::max);
    assert!(peak > 0.3 && peak < 0.5, "peak current {peak}");
}

#[test]
fn synthetic_noise_has_requested_spread() {
    let n = 100_000;
    let sigma = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = gen_synthetic_data(&Flat(2.0), (0.0, 1.0), ObservationPlacement::UniformRandom, n, sigma, &mut rng)
        .unwrap();
    let mean = d.responses.iter().sum::<f64>() / n as f64;
    let var = d.responses.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 2.0).abs() < 3.0 * sigma / (n as f64).sqrt());
    assert!((var.sqrt() - sigma).abs() < 3.0 * sigma / (2.0 * n as f64).sqrt());
    assert!(d.inputs.windows(2).all(|w| w[0][0] <= w[1][0]));
}

#[test]
fn fin_solver_with_constant_biot_matches_closure_form() {
    let mut theta = [0.0; 16];
    theta[0] = 4.0;
    let direct = solve_fin_fd(&theta, 0.1, 1.0, 0.5, 2049).unwrap();
    let closure = solve_fin_fd_with(|_| 4.0, 0.1, 1.0, 0.5, 2049).unwrap();
    assert_eq!(direct.values, closure.values);
    assert_eq!(direct.theta, theta.to_vec());
    // u'' + u'/x = 4u is convex where u > 0, so the profile sags below the chord.
    let mid = direct.value_at(0.55).unwrap();
    assert!(mid < 0.75 && mid > 0.0);
}

proptest! {
    #[test]
    fn tridiagonal_solution_satisfies_system(
        rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..40)
    ) {
        let n = rows.len();
        let sub: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let sup: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + sub[i].abs() + sup[i].abs()).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let u = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            let mut lhs = diag[i] * u[i];
            if i > 0 { lhs += sub[i] * u[i - 1]; }
            if i + 1 < n { lhs += sup[i] * u[i + 1]; }
            prop_assert!((lhs - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn biot_number_is_linear_in_coefficients(
        t in prop::collection::vec(-5.0f64..5.0, 16),
        p in prop::collection::vec(-5.0f64..5.0, 16),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        x in 0.1f64..1.0,
    ) {
        let mix: Vec<f64> = t.iter().zip(&p).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = biot_eval(&mix, x);
        let rhs = alpha * biot_eval(&t, x) + beta * biot_eval(&p, x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
