//! Steady heat transfer in a rotating annular disc (the Fin equation)
//!
//! `u'' + u'/x - Bi(x) u = 0` on `[a, 1]`, `u(a) = u_a`, `u(1) = u_1`,
//! with the Biot number expanded in monomials up to degree 15.

use crate::error::{Error, Result};
use crate::nn::Var;
use crate::problems::pde::{constant_target, residual_fn, BoundarySegment, Face, PdeProblem};
use crate::problems::DomainBox;

pub const BIOT_TERMS: usize = 16;
pub const DEFAULT_INNER_RADIUS: f64 = 0.1;
pub const DEFAULT_U_INNER: f64 = 1.0;
pub const DEFAULT_U_OUTER: f64 = 0.5;

/// `sum_n theta_n x^n` by Horner's rule.
pub fn biot_eval(theta: &[f64], x: f64) -> f64 {
    theta.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn biot_eval_var<'t>(theta: &[Var<'t>], x: f64) -> Var<'t> {
    let mut iter = theta.iter().rev();
    let first = *iter.next().expect("at least one coefficient");
    iter.fold(first, |acc, &c| acc * x + c)
}

/// Prior support `theta_n in [-d_n / 4, d_n]`, `d_0 = d_1 = 20`, `d_{n+1} = d_n / 2`.
pub fn biot_prior_domain() -> DomainBox {
    let mut d = [0.0; BIOT_TERMS];
    d[0] = 20.0;
    d[1] = 20.0;
    for n in 1..BIOT_TERMS - 1 {
        d[n + 1] = d[n] / 2.0;
    }
    DomainBox {
        lower: d.iter().map(|v| -0.25 * v).collect(),
        upper: d.to_vec(),
    }
}

pub fn fin_problem(theta_domain: DomainBox, a: f64, u_a: f64, u_1: f64) -> Result<PdeProblem> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!(
            "inner radius must lie in (0, 1), got {a}"
        )));
    }
    let residual = residual_fn(|_, x, u, theta| {
        let bi = biot_eval_var(theta, x[0]);
        u.hess[0] + u.grad[0] / x[0] - bi * u.value
    });
    Ok(PdeProblem {
        id: "biot".into(),
        domain: DomainBox {
            lower: vec![a],
            upper: vec![1.0],
        },
        param_domain: theta_domain,
        derivative_coords: vec![0],
        residual,
        boundaries: vec![
            BoundarySegment {
                name: "inner".into(),
                face: Face { coord: 0, upper: false },
                target: constant_target(u_a),
                weight: 1.0,
            },
            BoundarySegment {
                name: "outer".into(),
                face: Face { coord: 0, upper: true },
                target: constant_target(u_1),
                weight: 1.0,
            },
        ],
    })
}

/// Solution of `u'' + u'/x = 0` with the given Dirichlet values.
pub fn fin_log_solution(x: f64, a: f64, u_a: f64, u_1: f64) -> (f64, f64, f64) {
    let c = (u_a - u_1) / a.ln();
    (u_1 + c * x.ln(), c / x, -c / (x * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Jet, Tape};
    use proptest::prelude::*;

    fn zeros() -> Vec<f64> {
        vec![0.0; BIOT_TERMS]
    }

    #[test]
    fn constant_and_origin() {
        let mut th = zeros();
        th[0] = 3.5;
        assert_eq!(biot_eval(&th, 0.77), 3.5);
        th[4] = 9.0;
        assert_eq!(biot_eval(&th, 0.0), 3.5);
    }

    #[test]
    fn prior_domain_values() {
        let b = biot_prior_domain();
        assert_eq!((b.lower[0], b.upper[0]), (-5.0, 20.0));
        assert_eq!((b.lower[1], b.upper[1]), (-5.0, 20.0));
        assert_eq!((b.lower[2], b.upper[2]), (-2.5, 10.0));
        assert_eq!(b.upper[15], 20.0 / 2f64.powi(14));
        assert!((b.upper[15] - 1.2207e-3).abs() < 1e-7);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(fin_problem(biot_prior_domain(), 0.0, 1.0, 0.5).is_err());
        assert!(fin_problem(biot_prior_domain(), -0.2, 1.0, 0.5).is_err());
    }

    #[test]
    fn log_solution_is_exact_for_zero_biot() {
        let (a, ua, u1) = (0.1, 1.0, 0.5);
        let p = fin_problem(biot_prior_domain(), a, ua, u1).unwrap();
        for x in [0.1, 0.3, 0.77, 1.0] {
            let (u, du, d2u) = fin_log_solution(x, a, ua, u1);
            let jet = Jet { value: u, grad: vec![du], hess_diag: vec![d2u] };
            assert!(p.residual_value(&[x], &jet, &zeros()).abs() < 1e-12);
        }
        assert!((fin_log_solution(a, a, ua, u1).0 - ua).abs() < 1e-15);
        assert_eq!(fin_log_solution(1.0, a, ua, u1).0, u1);
        assert_eq!(p.boundary_value(0, &[a], &zeros()), ua);
        assert_eq!(p.boundary_value(1, &[1.0], &zeros()), u1);
    }

    #[test]
    fn plug_in_residuals() {
        let p = fin_problem(biot_prior_domain(), 0.2, 0.0, 0.0).unwrap();
        assert_eq!(p.residual_value(&[0.5], &Jet::constant(0.0, 1), &zeros()), 0.0);
        let mut th = zeros();
        th[0] = 4.0;
        assert_eq!(p.residual_value(&[0.5], &Jet::constant(2.5, 1), &th), -10.0);
    }

    proptest! {
        #[test]
        fn horner_matches_naive(th in proptest::collection::vec(-20.0f64..20.0, BIOT_TERMS), x in 0.1f64..1.0) {
            let naive: f64 = th.iter().enumerate().map(|(n, c)| c * x.powi(n as i32)).sum();
            prop_assert!((biot_eval(&th, x) - naive).abs() < 1e-13 * naive.abs().max(1.0));
        }

        #[test]
        fn biot_is_linear(th in proptest::collection::vec(-5.0f64..5.0, BIOT_TERMS),
                          ph in proptest::collection::vec(-5.0f64..5.0, BIOT_TERMS),
                          al in -3.0f64..3.0, be in -3.0f64..3.0, x in 0.1f64..1.0) {
            let mix: Vec<f64> = th.iter().zip(&ph).map(|(t, p)| al * t + be * p).collect();
            let lhs = biot_eval(&mix, x);
            let rhs = al * biot_eval(&th, x) + be * biot_eval(&ph, x);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn var_and_plain_horner_agree(th in proptest::collection::vec(-5.0f64..5.0, BIOT_TERMS), x in 0.1f64..1.0) {
            let tape = Tape::new();
            let v = tape.vars(&th);
            prop_assert_eq!(biot_eval_var(&v, x).value(), biot_eval(&th, x));
        }
    }
}
