//! Problem definitions: PDEs with Dirichlet boundaries, integral equations, and
//! the shipped voltammetry and Fin/Biot instances.

pub mod benchmarks;
pub mod data;
pub mod domain;
pub mod fin;
pub mod integral;
pub mod pde;
pub mod voltammetry;

pub use data::Dataset;
pub use domain::DomainBox;
pub use fin::{biot_eval, biot_prior_domain, fin_problem};
pub use integral::{EquationKind, IntegralProblem, KernelSingularity, UpperLimit};
pub use pde::{BoundarySegment, Face, PdeProblem};
pub use voltammetry::{
    voltammetry_boundary, voltammetry_integral, voltammetry_integral_on, voltammetry_pde,
    voltammetry_pde_on,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss weights `nu_1..nu_4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub nu: [f64; 4],
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { nu: [1.0; 4] }
    }
}

impl LossWeights {
    pub fn new(nu: [f64; 4]) -> Result<Self> {
        let w = LossWeights { nu };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("loss weights must be nonnegative, got {:?}", self.nu)));
        }
        if self.nu.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        LossWeights {
            nu: self.nu.map(|v| v * c),
        }
    }
}
