//! Integral equations with closed-form solutions, used as oracles.

use std::sync::Arc;

use crate::error::Result;
use crate::problems::integral::{AbelKernel, FixedKernel, FixedSource};
use crate::problems::{DomainBox, EquationKind, IntegralProblem, KernelSingularity, UpperLimit};

/// `u(x) = 1 + int_0^x u(y) dy` on `[0, 1]`; solution `e^x`.
pub fn second_kind_exponential() -> IntegralProblem {
    IntegralProblem::new(
        "second_kind_exponential",
        EquationKind::Second,
        UpperLimit::Volterra,
        0.0,
        1.0,
        Arc::new(FixedSource(|_| 1.0)),
        Arc::new(FixedKernel(|_, _| 1.0)),
        DomainBox::empty(),
    )
    .expect("fixed interval is valid")
}

/// `0 = -2 sqrt(t) + int_0^t u(s) / sqrt(t - s) ds` on `[0, t_max]`; solution `u = 1`.
pub fn abel_constant(t_max: f64) -> Result<IntegralProblem> {
    Ok(IntegralProblem::new(
        "abel_constant",
        EquationKind::First,
        UpperLimit::Volterra,
        0.0,
        t_max,
        Arc::new(FixedSource(|t| -2.0 * t.sqrt())),
        Arc::new(AbelKernel),
        DomainBox::empty(),
    )?
    .with_singularity(KernelSingularity::InverseSqrtDiagonal))
}
