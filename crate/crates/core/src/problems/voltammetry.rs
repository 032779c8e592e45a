//! Linear sweep voltammetry: the diffusion PDE for the reactant concentration
//! and the equivalent Abel integral equation for the current.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::nn::{sigmoid, Tape, Var};
use crate::problems::integral::{
    AbelKernel, EquationKind, IntegralProblem, KernelSingularity, Source, UpperLimit,
};
use crate::problems::pde::{constant_target, residual_fn, target_fn, BoundarySegment, Face, PdeProblem};
use crate::problems::DomainBox;

pub const E_START: f64 = -10.0;
pub const X_MAX: f64 = 200.0;
pub const T_MAX: f64 = 20.0;

/// Concentration imposed at the electrode: `1 / (1 + exp(E_start + t - E0))`.
pub fn voltammetry_boundary(t: f64, e0: f64, e_start: f64) -> f64 {
    sigmoid(-(e_start + t - e0))
}

/// Diffusion of the reactant on the truncated box `[0, 200] x [0, 20]` in `(x, t)`,
/// parameterised by the formal potential `E0`.
pub fn voltammetry_pde(e0_range: DomainBox, e_start: f64) -> PdeProblem {
    voltammetry_pde_on(e0_range, e_start, X_MAX, T_MAX)
}

/// [`voltammetry_pde`] on the box `[0, x_max] x [0, t_max]`.
pub fn voltammetry_pde_on(e0_range: DomainBox, e_start: f64, x_max: f64, t_max: f64) -> PdeProblem {
    let domain = DomainBox {
        lower: vec![0.0, 0.0],
        upper: vec![x_max, t_max],
    };
    // jet coordinates: 0 = x, 1 = t
    let residual = residual_fn(|_, _, u, _| u.grad[1] - u.hess[0]);
    let electrode = target_fn(move |_, x, theta| (theta[0] - (e_start + x[1])).sigmoid());
    PdeProblem {
        id: "voltammetry_pde".into(),
        domain,
        param_domain: e0_range,
        derivative_coords: vec![0, 1],
        residual,
        boundaries: vec![
            BoundarySegment {
                name: "initial".into(),
                face: Face { coord: 1, upper: false },
                target: constant_target(1.0),
                weight: 1.0,
            },
            BoundarySegment {
                name: "far_field".into(),
                face: Face { coord: 0, upper: true },
                target: constant_target(1.0),
                weight: 1.0,
            },
            BoundarySegment {
                name: "electrode".into(),
                face: Face { coord: 0, upper: false },
                target: electrode,
                weight: 1.0,
            },
        ],
    }
}

/// `v(t | E0) = -sqrt(pi) / (1 + exp(-(E_start + t - E0)))`.
pub struct VoltammetrySource {
    pub e_start: f64,
}

impl Source for VoltammetrySource {
    fn value(&self, t: f64, theta: &[f64]) -> f64 {
        -PI.sqrt() * sigmoid(self.e_start + t - theta[0])
    }

    fn eval<'t>(&self, _tape: &'t Tape, t: f64, theta: &[Var<'t>]) -> Var<'t> {
        ((self.e_start + t) - theta[0]).sigmoid() * (-PI.sqrt())
    }
}

/// First-kind Volterra equation for the current `I(t | E0)` with the Abel kernel.
pub fn voltammetry_integral(e0_range: DomainBox, e_start: f64) -> IntegralProblem {
    voltammetry_integral_on(e0_range, e_start, T_MAX).expect("fixed interval is valid")
}

/// [`voltammetry_integral`] on `[0, t_max]`.
pub fn voltammetry_integral_on(e0_range: DomainBox, e_start: f64, t_max: f64) -> Result<IntegralProblem> {
    Ok(IntegralProblem::new(
        "voltammetry_integral",
        EquationKind::First,
        UpperLimit::Volterra,
        0.0,
        t_max,
        Arc::new(VoltammetrySource { e_start }),
        Arc::new(AbelKernel),
        e0_range,
    )?
    .with_singularity(KernelSingularity::InverseSqrtDiagonal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient::JetVar;
    use crate::nn::Jet;

    fn e0_box() -> DomainBox {
        DomainBox::interval(-6.0, 6.0).unwrap()
    }

    #[test]
    fn boundary_values() {
        assert_eq!(voltammetry_boundary(3.0, -7.0, -10.0), 0.5);
        let v = voltammetry_boundary(0.0, 0.0, E_START);
        assert!((v - 1.0 / (1.0 + (-10f64).exp())).abs() < 1e-15);
        assert!((v - 0.9999546).abs() < 1e-7);
        let mut prev = 1.0;
        for i in 0..200 {
            let b = voltammetry_boundary(i as f64 * 0.5, 1.0, E_START);
            assert!(b < prev && b > 0.0);
            prev = b;
        }
        assert!(voltammetry_boundary(1e3, 0.0, E_START) < 1e-300);
    }

    #[test]
    fn constant_trial_function() {
        let p = voltammetry_pde(e0_box(), E_START);
        let one = Jet::constant(1.0, 2);
        assert_eq!(p.residual_value(&[5.0, 3.0], &one, &[0.0]), 0.0);
        let electrode = p.boundaries.iter().position(|b| b.name == "electrode").unwrap();
        for t in [0.0, 5.0, 10.0, 19.0] {
            let mismatch = 1.0 - p.boundary_value(electrode, &[0.0, t], &[0.0]);
            assert!(mismatch > 0.0);
            assert!((mismatch - (1.0 - voltammetry_boundary(t, 0.0, E_START))).abs() < 1e-15);
        }
    }

    #[test]
    fn complementary_species_residuals_cancel() {
        let p = voltammetry_pde(e0_box(), E_START);
        let u = Jet {
            value: 0.3,
            grad: vec![0.7, -1.1],
            hess_diag: vec![2.5, 0.4],
        };
        let v = Jet {
            value: 1.0 - u.value,
            grad: u.grad.iter().map(|g| -g).collect(),
            hess_diag: u.hess_diag.iter().map(|h| -h).collect(),
        };
        let x = [1.0, 2.0];
        assert_eq!(p.residual_value(&x, &u, &[1.0]) + p.residual_value(&x, &v, &[1.0]), 0.0);
    }

    #[test]
    fn linear_in_x_trial() {
        let p = voltammetry_pde(e0_box(), E_START);
        let jet_at = |x: f64| Jet {
            value: x / 200.0,
            grad: vec![1.0 / 200.0, 0.0],
            hess_diag: vec![0.0, 0.0],
        };
        assert_eq!(p.residual_value(&[50.0, 4.0], &jet_at(50.0), &[0.0]), 0.0);
        let far = p.boundaries.iter().position(|b| b.name == "far_field").unwrap();
        assert_eq!(jet_at(200.0).value - p.boundary_value(far, &[200.0, 7.0], &[0.0]), 0.0);
        let init = p.boundaries.iter().position(|b| b.name == "initial").unwrap();
        assert!((jet_at(20.0).value - p.boundary_value(init, &[20.0, 0.0], &[0.0])).abs() > 0.5);
    }

    #[test]
    fn integral_problem_shape() {
        let p = voltammetry_integral(e0_box(), E_START);
        assert_eq!(p.kind, EquationKind::First);
        assert_eq!(p.upper(3.0), 3.0);
        assert_eq!(p.b_star, 20.0);
        // E0 = E_start + t puts the logistic at its midpoint
        let v = p.source.value(4.0, &[E_START + 4.0]);
        assert!((v.abs() - PI.sqrt() / 2.0).abs() < 1e-15);
        let tape = Tape::new();
        let th = tape.vars(&[1.5]);
        assert_eq!(p.source.eval(&tape, 12.0, &th).value(), p.source.value(12.0, &[1.5]));
        let _ = JetVar::constant(&tape, 0.0, 1);
    }
}
