//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every elementary operation as a node holding at most two
//! parent indices and the local partial derivatives. [`Tape::gradient`] sweeps
//! the node list backwards once, so the adjoint of every recorded variable is
//! available after a single pass. Loss expressions over network jets and problem
//! parameters are written with ordinary arithmetic on [`Var`].

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

/// Append-only record of a scalar computation.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, parents: [usize; 2], partials: [f64; 2]) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        let index = nodes.len();
        nodes.push(Node { parents, partials });
        index
    }

    /// New independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let index = self.push([0, 0], [0.0, 0.0]);
        Var {
            tape: self,
            index,
            value,
        }
    }

    /// A recorded constant. Equivalent to a leaf whose adjoint is ignored.
    pub fn constant(&self, value: f64) -> Var<'_> {
        self.var(value)
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    fn unary(&self, x: &Var<'_>, value: f64, dx: f64) -> Var<'_> {
        let index = self.push([x.index, x.index], [dx, 0.0]);
        Var {
            tape: self,
            index,
            value,
        }
    }

    fn binary(&self, x: &Var<'_>, y: &Var<'_>, value: f64, dx: f64, dy: f64) -> Var<'_> {
        let index = self.push([x.index, y.index], [dx, dy]);
        Var {
            tape: self,
            index,
            value,
        }
    }

    /// Adjoints of every node with respect to `output`.
    pub fn gradient(&self, output: &Var<'_>) -> Adjoints {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![0.0; nodes.len()];
        adjoint[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            let node = nodes[i];
            adjoint[node.parents[0]] += node.partials[0] * a;
            adjoint[node.parents[1]] += node.partials[1] * a;
        }
        Adjoints(adjoint)
    }
}

/// Result of a reverse sweep, indexed by [`Var`].
#[derive(Clone, Debug)]
pub struct Adjoints(Vec<f64>);

impl Adjoints {
    pub fn wrt(&self, var: &Var<'_>) -> f64 {
        self.0[var.index]
    }

    pub fn wrt_all(&self, vars: &[Var<'_>]) -> Vec<f64> {
        vars.iter().map(|v| self.wrt(v)).collect()
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({} @ {})", self.value, self.index)
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn square(self) -> Var<'t> {
        self.tape
            .unary(&self, self.value * self.value, 2.0 * self.value)
    }

    pub fn powi(self, n: i32) -> Var<'t> {
        let d = if n == 0 {
            0.0
        } else {
            n as f64 * self.value.powi(n - 1)
        };
        self.tape.unary(&self, self.value.powi(n), d)
    }

    pub fn sqrt(self) -> Var<'t> {
        let s = self.value.sqrt();
        self.tape.unary(&self, s, 0.5 / s)
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.value.exp();
        self.tape.unary(&self, e, e)
    }

    pub fn ln(self) -> Var<'t> {
        self.tape.unary(&self, self.value.ln(), 1.0 / self.value)
    }

    pub fn tanh(self) -> Var<'t> {
        let t = self.value.tanh();
        self.tape.unary(&self, t, 1.0 - t * t)
    }

    /// Logistic function 1/(1+e^-x).
    pub fn sigmoid(self) -> Var<'t> {
        let s = crate::nn::sigmoid(self.value);
        self.tape.unary(&self, s, s * (1.0 - s))
    }

    pub fn recip(self) -> Var<'t> {
        let r = 1.0 / self.value;
        self.tape.unary(&self, r, -r * r)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .binary(&self, &rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .binary(&self, &rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.tape
            .binary(&self, &rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self.value / rhs.value;
        self.tape
            .binary(&self, &rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(&self, -self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.tape.unary(&self, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.tape.unary(&self, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.tape.unary(&self, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Var<'t> {
        self.tape.unary(&self, self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.tape.unary(&rhs, self - rhs.value, -1.0)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs * self
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self / rhs.value;
        rhs.tape.unary(&rhs, q, -q / rhs.value)
    }
}

/// Sum of a non-empty slice of variables, or a fresh zero constant.
pub fn sum<'t>(tape: &'t Tape, terms: &[Var<'t>]) -> Var<'t> {
    let mut iter = terms.iter();
    match iter.next() {
        None => tape.constant(0.0),
        Some(first) => iter.fold(*first, |acc, v| acc + *v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = tape.var(-2.0);
        let z = x * y + x.square();
        let g = tape.gradient(&z);
        assert_eq!(z.value(), 3.0);
        assert_eq!(g.wrt(&x), -2.0 + 6.0);
        assert_eq!(g.wrt(&y), 3.0);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let f = |x: f64| ((x.sqrt() + x.exp()).ln() * x.tanh() / (1.0 + x * x)).powi(3);
        let x0 = 0.7;
        let tape = Tape::new();
        let x = tape.var(x0);
        let y = ((x.sqrt() + x.exp()).ln() * x.tanh() / (1.0 + x * x)).powi(3);
        assert!((y.value() - f(x0)).abs() < 1e-15);
        let h = 1e-6;
        let fd = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
        let ad = tape.gradient(&y).wrt(&x);
        assert!((fd - ad).abs() < 1e-8 * fd.abs().max(1.0));
    }

    #[test]
    fn reused_variable_accumulates() {
        let tape = Tape::new();
        let x = tape.var(2.0);
        let terms: Vec<_> = (0..5).map(|_| x * 2.0).collect();
        let s = sum(&tape, &terms);
        assert_eq!(tape.gradient(&s).wrt(&x), 10.0);
    }

    #[test]
    fn scalar_on_left() {
        let tape = Tape::new();
        let x = tape.var(4.0);
        let y = 1.0 / x + (2.0 - x) * 3.0;
        let g = tape.gradient(&y);
        assert!((g.wrt(&x) - (-1.0 / 16.0 - 3.0)).abs() < 1e-15);
    }
}
