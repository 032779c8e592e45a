//! Quadrature and finite-difference reference solvers, and synthetic data.

pub mod data;
pub mod fin;
pub mod grid;
pub mod volterra;

pub use data::{gen_synthetic_data, Curve, ObservationPlacement, SurrogateCurve};
pub use fin::{solve_fin_fd, solve_fin_fd_with, solve_tridiagonal};
pub use grid::{GridProvenance, GridSolution, Placement};
pub use volterra::{solve_volterra_first_kind, solve_volterra_second_kind};

use crate::error::{Error, Result};
use crate::trainer::SurrogateModel;

/// Electrode current `du/dx` at `x = 0` from a voltammetry PDE surrogate, or the
/// surrogate value itself for a current surrogate of the integral formulation.
pub fn surrogate_current(model: &SurrogateModel, t: f64, theta: &[f64]) -> Result<f64> {
    if model.is_integral() {
        return model.value(&[t], theta);
    }
    if model.x_dim() != 2 {
        return Err(Error::Shape("current needs a (x, t) surrogate".into()));
    }
    Ok(model.jet(&[0.0, t], theta, &[0])?.grad[0])
}
