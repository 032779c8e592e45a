//! Dense networks, jets, reverse-mode gradients, the Adam optimizer and the
//! Gaussian radial-basis output head.

pub mod autodiff;
pub mod checkpoint;
pub mod gradient;
pub mod network;
pub mod optim;
pub mod rbf;

pub use autodiff::{Adjoints, Tape, Var};
pub use checkpoint::Checkpoint;
pub use gradient::{param_gradient, JetVar};
pub use network::{init_dense, Activation, DenseNetwork, Forward, Layer, Seeds};
pub use optim::{optimizer_step, Adam, AdamConfig, OptimizerState};
pub use rbf::{rbf_eval, rbf_head, RbfBasis, RbfExpansion, RbfHead};

use serde::{Deserialize, Serialize};

/// Value plus first and pure second derivatives over selected input coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess_diag: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, ncoords: usize) -> Self {
        Jet {
            value,
            grad: vec![0.0; ncoords],
            hess_diag: vec![0.0; ncoords],
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
