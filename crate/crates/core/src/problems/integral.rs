//! Fredholm and Volterra integral equations of the first and second kind:
//!
//! ```text
//! first kind:   0    = v(x|theta) + int_a^{b(x)} k(x,y|theta) u(y) dy
//! second kind:  u(x) = v(x|theta) + int_a^{b(x)} k(x,y|theta) u(y) dy
//! ```
//!
//! with `b(x) = b*` (Fredholm) or `b(x) = x` (Volterra), `x` in `[a, b*]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Tape, Var};
use crate::problems::DomainBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpperLimit {
    /// `b(x) = b*`
    Fredholm,
    /// `b(x) = x`
    Volterra,
}

/// Behaviour of the kernel on the diagonal `y = x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSingularity {
    Regular,
    /// `k(x, y) ~ (x - y)^(-1/2)` as `y -> x`.
    InverseSqrtDiagonal,
}

/// Source term `v(x | theta)`.
pub trait Source: Send + Sync {
    fn value(&self, x: f64, theta: &[f64]) -> f64;
    fn eval<'t>(&self, tape: &'t Tape, x: f64, theta: &[Var<'t>]) -> Var<'t>;
}

/// Kernel `k(x, y | theta)`.
pub trait Kernel: Send + Sync {
    fn value(&self, x: f64, y: f64, theta: &[f64]) -> f64;

    fn eval<'t>(&self, tape: &'t Tape, x: f64, y: f64, theta: &[Var<'t>]) -> Var<'t>;

    /// `out[j] = k(x, ys[j])`.
    fn row(&self, x: f64, ys: &[f64], theta: &[f64], out: &mut [f64]) {
        for (o, &y) in out.iter_mut().zip(ys) {
            *o = self.value(x, y, theta);
        }
    }

    /// Exact `int_lo^hi k(x, y) dy` when it is known in closed form.
    fn cell_integral(&self, _x: f64, _lo: f64, _hi: f64, _theta: &[f64]) -> Option<f64> {
        None
    }
}

/// Parameter-free source given by a plain function.
pub struct FixedSource(pub fn(f64) -> f64);

impl Source for FixedSource {
    fn value(&self, x: f64, _: &[f64]) -> f64 {
        (self.0)(x)
    }
    fn eval<'t>(&self, tape: &'t Tape, x: f64, _: &[Var<'t>]) -> Var<'t> {
        tape.constant((self.0)(x))
    }
}

/// Parameter-free kernel given by a plain function.
pub struct FixedKernel(pub fn(f64, f64) -> f64);

impl Kernel for FixedKernel {
    fn value(&self, x: f64, y: f64, _: &[f64]) -> f64 {
        (self.0)(x, y)
    }
    fn eval<'t>(&self, tape: &'t Tape, x: f64, y: f64, _: &[Var<'t>]) -> Var<'t> {
        tape.constant((self.0)(x, y))
    }
}

/// Abel kernel `1 / sqrt(x - y)`.
pub struct AbelKernel;

impl Kernel for AbelKernel {
    fn value(&self, x: f64, y: f64, _: &[f64]) -> f64 {
        1.0 / (x - y).sqrt()
    }
    fn eval<'t>(&self, tape: &'t Tape, x: f64, y: f64, _: &[Var<'t>]) -> Var<'t> {
        tape.constant(1.0 / (x - y).sqrt())
    }
    fn row(&self, x: f64, ys: &[f64], _: &[f64], out: &mut [f64]) {
        for (o, &y) in out.iter_mut().zip(ys) {
            *o = 1.0 / (x - y).sqrt();
        }
    }
    fn cell_integral(&self, x: f64, lo: f64, hi: f64, _: &[f64]) -> Option<f64> {
        Some(2.0 * ((x - lo).sqrt() - (x - hi).max(0.0).sqrt()))
    }
}

#[derive(Clone)]
pub struct IntegralProblem {
    pub id: String,
    pub kind: EquationKind,
    pub limit: UpperLimit,
    pub a: f64,
    pub b_star: f64,
    pub source: Arc<dyn Source>,
    pub kernel: Arc<dyn Kernel>,
    pub param_domain: DomainBox,
    pub singularity: KernelSingularity,
}

impl fmt::Debug for IntegralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralProblem")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("limit", &self.limit)
            .field("a", &self.a)
            .field("b_star", &self.b_star)
            .field("param_domain", &self.param_domain)
            .field("singularity", &self.singularity)
            .finish()
    }
}

impl IntegralProblem {
    pub fn new(
        id: impl Into<String>,
        kind: EquationKind,
        limit: UpperLimit,
        a: f64,
        b_star: f64,
        source: Arc<dyn Source>,
        kernel: Arc<dyn Kernel>,
        param_domain: DomainBox,
    ) -> Result<Self> {
        if !(a < b_star) {
            return Err(Error::Config(format!(
                "integration interval needs a < b*, got [{a}, {b_star}]"
            )));
        }
        Ok(IntegralProblem {
            id: id.into(),
            kind,
            limit,
            a,
            b_star,
            source,
            kernel,
            param_domain,
            singularity: KernelSingularity::Regular,
        })
    }

    pub fn with_singularity(mut self, singularity: KernelSingularity) -> Self {
        self.singularity = singularity;
        self
    }

    /// Upper integration limit `b(x)`.
    pub fn upper(&self, x: f64) -> f64 {
        match self.limit {
            UpperLimit::Fredholm => self.b_star,
            UpperLimit::Volterra => x,
        }
    }

    pub fn domain(&self) -> DomainBox {
        DomainBox {
            lower: vec![self.a],
            upper: vec![self.b_star],
        }
    }

    /// Minimum separation kept between `y` and a singular diagonal when sampling.
    pub fn diagonal_gap(&self) -> f64 {
        1e-8 * (self.b_star - self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_interval() {
        let p = IntegralProblem::new(
            "x",
            EquationKind::Second,
            UpperLimit::Volterra,
            1.0,
            1.0,
            Arc::new(FixedSource(|_| 1.0)),
            Arc::new(FixedKernel(|_, _| 1.0)),
            DomainBox::empty(),
        );
        assert!(matches!(p, Err(Error::Config(_))));
    }

    #[test]
    fn abel_cell_integral_is_exact() {
        let k = AbelKernel;
        let exact = k.cell_integral(2.0, 0.0, 2.0, &[]).unwrap();
        assert!((exact - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let tape = Tape::new();
        assert_eq!(k.eval(&tape, 3.0, 2.0, &[]).value(), 1.0);
    }
}
