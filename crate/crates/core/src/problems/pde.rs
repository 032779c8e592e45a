//! Declarative PDE problems: an interior residual and Dirichlet boundary segments.

use std::fmt;
use std::sync::Arc;

use crate::nn::gradient::JetVar;
use crate::nn::{Jet, Tape, Var};
use crate::problems::DomainBox;

/// Interior residual `N(x, u | theta) - h(x | theta)`.
///
/// `u` carries derivatives over the problem's `derivative_coords`, in that order.
pub trait Residual: Send + Sync {
    fn eval<'t>(&self, tape: &'t Tape, x: &[f64], u: &JetVar<'t>, theta: &[Var<'t>]) -> Var<'t>;
}

/// Boundary target `b(x | theta)`.
pub trait BoundaryTarget: Send + Sync {
    fn eval<'t>(&self, tape: &'t Tape, x: &[f64], theta: &[Var<'t>]) -> Var<'t>;
}

struct FnResidual<F>(F);

impl<F> Residual for FnResidual<F>
where
    F: for<'t> Fn(&'t Tape, &[f64], &JetVar<'t>, &[Var<'t>]) -> Var<'t> + Send + Sync,
{
    fn eval<'t>(&self, tape: &'t Tape, x: &[f64], u: &JetVar<'t>, theta: &[Var<'t>]) -> Var<'t> {
        (self.0)(tape, x, u, theta)
    }
}

struct FnTarget<F>(F);

impl<F> BoundaryTarget for FnTarget<F>
where
    F: for<'t> Fn(&'t Tape, &[f64], &[Var<'t>]) -> Var<'t> + Send + Sync,
{
    fn eval<'t>(&self, tape: &'t Tape, x: &[f64], theta: &[Var<'t>]) -> Var<'t> {
        (self.0)(tape, x, theta)
    }
}

pub fn residual_fn<F>(f: F) -> Arc<dyn Residual>
where
    F: for<'t> Fn(&'t Tape, &[f64], &JetVar<'t>, &[Var<'t>]) -> Var<'t> + Send + Sync + 'static,
{
    Arc::new(FnResidual(f))
}

pub fn target_fn<F>(f: F) -> Arc<dyn BoundaryTarget>
where
    F: for<'t> Fn(&'t Tape, &[f64], &[Var<'t>]) -> Var<'t> + Send + Sync + 'static,
{
    Arc::new(FnTarget(f))
}

pub fn constant_target(value: f64) -> Arc<dyn BoundaryTarget> {
    target_fn(move |tape, _, _| tape.constant(value))
}

/// The face `x[coord] = lower` or `x[coord] = upper` of the domain box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub coord: usize,
    pub upper: bool,
}

#[derive(Clone)]
pub struct BoundarySegment {
    pub name: String,
    pub face: Face,
    pub target: Arc<dyn BoundaryTarget>,
    pub weight: f64,
}

impl fmt::Debug for BoundarySegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySegment")
            .field("name", &self.name)
            .field("face", &self.face)
            .field("weight", &self.weight)
            .finish()
    }
}

#[derive(Clone)]
pub struct PdeProblem {
    pub id: String,
    pub domain: DomainBox,
    pub param_domain: DomainBox,
    pub derivative_coords: Vec<usize>,
    pub residual: Arc<dyn Residual>,
    pub boundaries: Vec<BoundarySegment>,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("param_domain", &self.param_domain)
            .field("derivative_coords", &self.derivative_coords)
            .field("boundaries", &self.boundaries)
            .finish()
    }
}

impl PdeProblem {
    /// Residual at a point for a plain (untracked) jet.
    pub fn residual_value(&self, x: &[f64], u: &Jet, theta: &[f64]) -> f64 {
        let tape = Tape::new();
        let jet = JetVar {
            value: tape.var(u.value),
            grad: tape.vars(&u.grad),
            hess: tape.vars(&u.hess_diag),
        };
        let th = tape.vars(theta);
        self.residual.eval(&tape, x, &jet, &th).value()
    }

    pub fn boundary_value(&self, segment: usize, x: &[f64], theta: &[f64]) -> f64 {
        let tape = Tape::new();
        let th = tape.vars(theta);
        self.boundaries[segment].target.eval(&tape, x, &th).value()
    }

    /// Point on a face, with the free coordinates taken from `free` (a full-length point).
    pub fn project_to_face(&self, face: Face, free: &mut [f64]) {
        free[face.coord] = if face.upper {
            self.domain.upper[face.coord]
        } else {
            self.domain.lower[face.coord]
        };
    }
}
