//! Parameter gradients of scalar losses built from network jets.
//!
//! The network jets at every point enter a [`Tape`] as leaves; the loss is
//! recorded on the tape, swept backwards, and the leaf adjoints are handed to
//! [`DenseNetwork::backward`] as seeds.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::autodiff::{Adjoints, Tape, Var};
use crate::nn::network::{DenseNetwork, Forward, Seeds};

/// A network jet recorded on a tape.
#[derive(Clone, Debug)]
pub struct JetVar<'t> {
    pub value: Var<'t>,
    pub grad: Vec<Var<'t>>,
    pub hess: Vec<Var<'t>>,
}

impl<'t> JetVar<'t> {
    /// Constant jet (no input dependence) with `ncoords` derivative slots.
    pub fn constant(tape: &'t Tape, value: f64, ncoords: usize) -> Self {
        JetVar {
            value: tape.constant(value),
            grad: (0..ncoords).map(|_| tape.constant(0.0)).collect(),
            hess: (0..ncoords).map(|_| tape.constant(0.0)).collect(),
        }
    }
}

/// Record the jets of output `output` at every point of `fwd` as tape leaves.
pub fn jet_leaves<'t>(tape: &'t Tape, fwd: &Forward, output: usize) -> Vec<JetVar<'t>> {
    let c = fwd.ncoords();
    (0..fwd.points())
        .map(|p| JetVar {
            value: tape.var(fwd.value(output, p)),
            grad: (0..c).map(|k| tape.var(fwd.grad(output, k, p))).collect(),
            hess: (0..c).map(|k| tape.var(fwd.hess(output, k, p))).collect(),
        })
        .collect()
}

/// Copy leaf adjoints into the seed buffer of the matching forward pass.
pub fn add_leaf_seeds(seeds: &mut Seeds, adjoints: &Adjoints, leaves: &[JetVar<'_>], output: usize) {
    for (p, leaf) in leaves.iter().enumerate() {
        *seeds.value_mut(output, p) += adjoints.wrt(&leaf.value);
        for (k, g) in leaf.grad.iter().enumerate() {
            *seeds.grad_mut(output, k, p) += adjoints.wrt(g);
        }
        for (k, h) in leaf.hess.iter().enumerate() {
            *seeds.hess_mut(output, k, p) += adjoints.wrt(h);
        }
    }
}

/// Exact gradient of a scalar loss over one batch with respect to every network parameter.
///
/// `loss` receives one jet per row of `inputs` (derivatives over `coords`) and
/// returns the batch loss. Returns `(loss value, flat gradient)`.
pub fn param_gradient<F>(
    net: &DenseNetwork,
    inputs: &Array2<f64>,
    coords: &[usize],
    loss: F,
) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> FnOnce(&'t Tape, &[JetVar<'t>]) -> Var<'t>,
{
    if net.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "param_gradient needs a scalar-output network, got {} outputs",
            net.output_dim()
        )));
    }
    let fwd = net.forward(inputs, coords)?;
    let tape = Tape::with_capacity(fwd.columns() * 8);
    let leaves = jet_leaves(&tape, &fwd, 0);
    let out = loss(&tape, &leaves);
    if !out.value().is_finite() {
        return Err(Error::Numerical(format!(
            "loss evaluated to {}",
            out.value()
        )));
    }
    let adjoints = tape.gradient(&out);
    let mut seeds = fwd.seeds();
    add_leaf_seeds(&mut seeds, &adjoints, &leaves, 0);
    let grad = net.backward(&fwd, &seeds)?;
    Ok((out.value(), grad))
}
