//! Gaussian radial-basis output head.
//!
//! A dense network maps the parameter vector to `5K` raw outputs, read per basis
//! as `[coefficient, mean_0, mean_1, scale_0, scale_1]`. Means are mapped
//! affinely into the domain box (raw 0 is the box centre, raw ±1 the faces) and
//! scales through `half_width * (softplus(raw) + 1e-6)`, so every scale is
//! strictly positive. The expansion is
//!
//! ```text
//! f(x) = sum_k c_k exp(-sum_j ((x_j - mu_kj) / s_kj)^2)
//! ```

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::{DenseNetwork, Forward, Seeds};
use crate::nn::{sigmoid, softplus, Jet};

pub const RAW_PER_BASIS: usize = 5;
pub const SCALE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfBasis {
    pub coefficient: f64,
    pub mean: [f64; 2],
    pub scale: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RbfExpansion {
    pub bases: Vec<RbfBasis>,
}

/// Dense network feeding a Gaussian expansion over a 2-D box.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfHead {
    pub net: DenseNetwork,
    pub bases: usize,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

fn check_layout(net: &DenseNetwork, k: usize) -> Result<()> {
    if k == 0 || net.output_dim() != RAW_PER_BASIS * k {
        return Err(Error::Config(format!(
            "RBF head with {k} bases needs {} network outputs, network has {}",
            RAW_PER_BASIS * k,
            net.output_dim()
        )));
    }
    Ok(())
}

/// Build the expansion produced by `net` at parameter `theta`.
pub fn rbf_head(
    net: &DenseNetwork,
    theta: &[f64],
    k: usize,
    lower: [f64; 2],
    upper: [f64; 2],
) -> Result<RbfExpansion> {
    check_layout(net, k)?;
    let raw = net.eval(theta)?;
    Ok(expansion_from_raw(&raw, lower, upper))
}

fn half_and_centre(lower: [f64; 2], upper: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    (
        [0.5 * (upper[0] - lower[0]), 0.5 * (upper[1] - lower[1])],
        [0.5 * (upper[0] + lower[0]), 0.5 * (upper[1] + lower[1])],
    )
}

pub fn expansion_from_raw(raw: &[f64], lower: [f64; 2], upper: [f64; 2]) -> RbfExpansion {
    let (half, centre) = half_and_centre(lower, upper);
    let bases = raw
        .chunks_exact(RAW_PER_BASIS)
        .map(|r| RbfBasis {
            coefficient: r[0],
            mean: [centre[0] + half[0] * r[1], centre[1] + half[1] * r[2]],
            scale: [
                half[0] * (softplus(r[3]) + SCALE_FLOOR),
                half[1] * (softplus(r[4]) + SCALE_FLOOR),
            ],
        })
        .collect();
    RbfExpansion { bases }
}

impl RbfExpansion {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        rbf_eval(self, x, &[]).value
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Value and closed-form derivatives of the expansion at `x`.
pub fn rbf_eval(exp: &RbfExpansion, x: [f64; 2], coords: &[usize]) -> Jet {
    let mut jet = Jet::constant(0.0, coords.len());
    for b in &exp.bases {
        let q = [
            (x[0] - b.mean[0]) / b.scale[0],
            (x[1] - b.mean[1]) / b.scale[1],
        ];
        let g = b.coefficient * (-(q[0] * q[0] + q[1] * q[1])).exp();
        jet.value += g;
        for (i, &j) in coords.iter().enumerate() {
            jet.grad[i] += g * (-2.0 * q[j] / b.scale[j]);
            jet.hess_diag[i] += g * (4.0 * q[j] * q[j] - 2.0) / (b.scale[j] * b.scale[j]);
        }
    }
    jet
}

/// Adjoint of the raw network outputs given adjoints of the evaluated jet.
///
/// `seed` carries d(loss)/d(value), d(loss)/d(grad_i), d(loss)/d(hess_i).
pub fn raw_adjoint(
    raw: &[f64],
    lower: [f64; 2],
    upper: [f64; 2],
    x: [f64; 2],
    coords: &[usize],
    seed: &Jet,
    out: &mut [f64],
) {
    let (half, centre) = half_and_centre(lower, upper);
    for (r, o) in raw
        .chunks_exact(RAW_PER_BASIS)
        .zip(out.chunks_exact_mut(RAW_PER_BASIS))
    {
        let c = r[0];
        let mean = [centre[0] + half[0] * r[1], centre[1] + half[1] * r[2]];
        let sp = [softplus(r[3]), softplus(r[4])];
        let s = [half[0] * (sp[0] + SCALE_FLOOR), half[1] * (sp[1] + SCALE_FLOOR)];
        let q = [(x[0] - mean[0]) / s[0], (x[1] - mean[1]) / s[1]];
        let g = (-(q[0] * q[0] + q[1] * q[1])).exp();

        // Sensitivity of the loss to this basis' Gaussian factor, per unit coefficient.
        let mut a_over_c = seed.value;
        for (i, &j) in coords.iter().enumerate() {
            a_over_c += seed.grad[i] * (-2.0 * q[j] / s[j]);
            a_over_c += seed.hess_diag[i] * (4.0 * q[j] * q[j] - 2.0) / (s[j] * s[j]);
        }
        a_over_c *= g;
        let a = c * a_over_c;

        let mut dq = [-2.0 * q[0] * a, -2.0 * q[1] * a];
        let mut ds_direct = [0.0; 2];
        for (i, &j) in coords.iter().enumerate() {
            let cg = c * g;
            let a1 = seed.grad[i];
            let a2 = seed.hess_diag[i];
            dq[j] += a1 * cg * (-2.0 / s[j]) + a2 * cg * 8.0 * q[j] / (s[j] * s[j]);
            ds_direct[j] += a1 * cg * 2.0 * q[j] / (s[j] * s[j])
                + a2 * cg * (4.0 * q[j] * q[j] - 2.0) * (-2.0) / (s[j] * s[j] * s[j]);
        }
        o[0] += a_over_c;
        for j in 0..2 {
            let d_mean = -dq[j] / s[j];
            let d_scale = -dq[j] * q[j] / s[j] + ds_direct[j];
            o[1 + j] += d_mean * half[j];
            o[3 + j] += d_scale * half[j] * sigmoid(r[3 + j]);
        }
    }
}

impl RbfHead {
    pub fn new(net: DenseNetwork, bases: usize, lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        check_layout(&net, bases)?;
        if !(lower[0] < upper[0] && lower[1] < upper[1]) {
            return Err(Error::Config("RBF domain box must have lower < upper".into()));
        }
        Ok(RbfHead {
            net,
            bases,
            lower,
            upper,
        })
    }

    pub fn expansion(&self, theta: &[f64]) -> Result<RbfExpansion> {
        rbf_head(&self.net, theta, self.bases, self.lower, self.upper)
    }

    pub fn eval_jet(&self, x: [f64; 2], theta: &[f64], coords: &[usize]) -> Result<Jet> {
        Ok(rbf_eval(&self.expansion(theta)?, x, coords))
    }

    /// Batched evaluation: row `p` of `thetas` parameterises the expansion evaluated at `xs[p]`.
    pub fn forward(
        &self,
        thetas: &Array2<f64>,
        xs: &[[f64; 2]],
        coords: &[usize],
    ) -> Result<(Forward, Vec<Jet>)> {
        if thetas.nrows() != xs.len() {
            return Err(Error::Shape("one parameter row per point required".into()));
        }
        let fwd = self.net.forward(thetas, &[])?;
        let mut raw = vec![0.0; self.net.output_dim()];
        let jets = xs
            .iter()
            .enumerate()
            .map(|(p, &x)| {
                for (o, r) in raw.iter_mut().enumerate() {
                    *r = fwd.value(o, p);
                }
                rbf_eval(&expansion_from_raw(&raw, self.lower, self.upper), x, coords)
            })
            .collect();
        Ok((fwd, jets))
    }

    /// Parameter gradient given one jet adjoint per point.
    pub fn backward(
        &self,
        fwd: &Forward,
        xs: &[[f64; 2]],
        coords: &[usize],
        jet_seeds: &[Jet],
    ) -> Result<Vec<f64>> {
        let mut seeds: Seeds = fwd.seeds();
        let nout = self.net.output_dim();
        let mut raw = vec![0.0; nout];
        let mut adj = vec![0.0; nout];
        for (p, (&x, seed)) in xs.iter().zip(jet_seeds).enumerate() {
            for (o, r) in raw.iter_mut().enumerate() {
                *r = fwd.value(o, p);
            }
            adj.iter_mut().for_each(|a| *a = 0.0);
            raw_adjoint(&raw, self.lower, self.upper, x, coords, seed, &mut adj);
            for (o, a) in adj.iter().enumerate() {
                *seeds.value_mut(o, p) = *a;
            }
        }
        self.net.backward(fwd, &seeds)
    }
}
