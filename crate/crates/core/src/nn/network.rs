//! Dense tanh networks with exact input-derivative propagation.
//!
//! The batched forward pass carries, for every point, the value together with
//! first and pure second derivatives with respect to a chosen set of input
//! coordinates. All channels are stacked side by side as columns so that each
//! layer is a single matrix product:
//!
//! ```text
//! columns = [ value (n) | d/dx_k0 (n) | ... | d2/dx_k0^2 (n) | ... ]
//! ```
//!
//! [`DenseNetwork::backward`] is the matching reverse sweep. It takes adjoints for
//! every output channel and returns the exact parameter gradient, including the
//! terms that flow through the derivative channels.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// Linear hidden layers; used to probe the derivative machinery.
    Identity,
}

impl Activation {
    /// Value and the first three derivatives, expressed through the activated value.
    #[inline]
    fn derivatives(self, z: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let a = z.tanh();
                let s1 = 1.0 - a * a;
                let s2 = -2.0 * a * s1;
                let s3 = -2.0 * s1 * s1 + 4.0 * a * a * s1;
                (a, s1, s2, s3)
            }
            Activation::Identity => (z, 1.0, 0.0, 0.0),
        }
    }

    /// First three derivatives given the activated value `a`.
    #[inline]
    fn derivatives_from_output(self, a: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let s1 = 1.0 - a * a;
                (s1, -2.0 * a * s1, -2.0 * s1 * s1 + 4.0 * a * a * s1)
            }
            Activation::Identity => (1.0, 0.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Shape (outputs, inputs).
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Fully connected network: tanh on hidden layers, affine output.
///
/// Inputs pass through a fixed affine normalization `(x - offset) * scale`
/// before the first layer; it is not trained.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<Layer>,
    activation: Activation,
    input_offset: Vec<f64>,
    input_scale: Vec<f64>,
}

/// Per-layer intermediate values kept for the reverse sweep.
#[derive(Clone, Debug)]
struct LayerCache {
    input: Array2<f64>,
    pre: Array2<f64>,
}

/// Output of a batched forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    points: usize,
    ncoords: usize,
    output: Array2<f64>,
    caches: Vec<LayerCache>,
}

impl Forward {
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn ncoords(&self) -> usize {
        self.ncoords
    }

    pub fn columns(&self) -> usize {
        self.points * (1 + 2 * self.ncoords)
    }

    /// Whole stacked output, shape (outputs, columns).
    pub fn stacked(&self) -> &Array2<f64> {
        &self.output
    }

    #[inline]
    pub fn value(&self, output: usize, point: usize) -> f64 {
        self.output[[output, point]]
    }

    #[inline]
    pub fn grad(&self, output: usize, coord: usize, point: usize) -> f64 {
        self.output[[output, (1 + coord) * self.points + point]]
    }

    #[inline]
    pub fn hess(&self, output: usize, coord: usize, point: usize) -> f64 {
        self.output[[output, (1 + self.ncoords + coord) * self.points + point]]
    }

    pub fn jet(&self, output: usize, point: usize) -> Jet {
        Jet {
            value: self.value(output, point),
            grad: (0..self.ncoords)
                .map(|k| self.grad(output, k, point))
                .collect(),
            hess_diag: (0..self.ncoords)
                .map(|k| self.hess(output, k, point))
                .collect(),
        }
    }

    /// Zeroed adjoint buffer matching the stacked output.
    pub fn seeds(&self) -> Seeds {
        Seeds {
            points: self.points,
            ncoords: self.ncoords,
            data: Array2::zeros(self.output.raw_dim()),
        }
    }
}

/// Adjoints of a batched output, laid out like [`Forward::stacked`].
#[derive(Clone, Debug)]
pub struct Seeds {
    points: usize,
    ncoords: usize,
    data: Array2<f64>,
}

impl Seeds {
    #[inline]
    pub fn value_mut(&mut self, output: usize, point: usize) -> &mut f64 {
        &mut self.data[[output, point]]
    }

    #[inline]
    pub fn grad_mut(&mut self, output: usize, coord: usize, point: usize) -> &mut f64 {
        &mut self.data[[output, (1 + coord) * self.points + point]]
    }

    #[inline]
    pub fn hess_mut(&mut self, output: usize, coord: usize, point: usize) -> &mut f64 {
        let c = self.ncoords;
        &mut self.data[[output, (1 + c + coord) * self.points + point]]
    }
}

/// Symmetric-uniform fan-based initialization, deterministic in `seed`.
pub fn init_dense(layer_dims: &[usize], seed: u64) -> Result<DenseNetwork> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "a network needs at least an input and an output size, got {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::Config(format!(
            "layer sizes must be positive, got {layer_dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let half = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-half..=half));
            let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-half..=half));
            Layer { weights, bias }
        })
        .collect();
    DenseNetwork::from_layers(layers)
}

impl DenseNetwork {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::Shape(format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i + 1,
                    pair[1].inputs(),
                    i,
                    pair[0].outputs()
                )));
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.outputs() {
                return Err(Error::Shape(format!(
                    "layer {i} has {} biases for {} outputs",
                    layer.bias.len(),
                    layer.outputs()
                )));
            }
            if layer.inputs() == 0 || layer.outputs() == 0 {
                return Err(Error::Config(format!("layer {i} has a zero dimension")));
            }
            if !layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::Numerical(format!("layer {i} has non-finite parameters")));
            }
        }
        let d = layers[0].inputs();
        Ok(DenseNetwork {
            layers,
            activation: Activation::Tanh,
            input_offset: vec![0.0; d],
            input_scale: vec![1.0; d],
        })
    }

    /// Map the box `[lower, upper]` onto `[-1, 1]` before the first layer.
    /// Collapsed coordinates (`lower == upper`) are centred with unit scale.
    pub fn with_input_box(mut self, lower: &[f64], upper: &[f64]) -> Result<Self> {
        let d = self.input_dim();
        if lower.len() != d || upper.len() != d {
            return Err(Error::Shape(format!(
                "input box has {} / {} bounds for {} inputs",
                lower.len(),
                upper.len(),
                d
            )));
        }
        for i in 0..d {
            let width = upper[i] - lower[i];
            self.input_offset[i] = 0.5 * (lower[i] + upper[i]);
            self.input_scale[i] = if width > 0.0 { 2.0 / width } else { 1.0 };
        }
        Ok(self)
    }

    pub fn with_input_normalization(mut self, offset: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if offset.len() != self.input_dim() || scale.len() != self.input_dim() {
            return Err(Error::Shape("input normalization length mismatch".into()));
        }
        self.input_offset = offset;
        self.input_scale = scale;
        Ok(self)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_offset(&self) -> &[f64] {
        &self.input_offset
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Layer::outputs));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = params[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    /// Mutable views of every parameter block, in flattening order.
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut blocks = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            blocks.push(
                layer
                    .weights
                    .as_slice_mut()
                    .expect("weights are stored in standard layout"),
            );
            blocks.push(
                layer
                    .bias
                    .as_slice_mut()
                    .expect("biases are contiguous"),
            );
        }
        blocks
    }

    /// Plain forward pass at one point.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let inputs = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| Error::Shape(e.to_string()))?;
        let fwd = self.forward(&inputs, &[])?;
        Ok((0..self.output_dim()).map(|o| fwd.value(o, 0)).collect())
    }

    /// Value, gradient and pure second derivatives of a scalar-output network.
    pub fn eval_jet(&self, x: &[f64], coords: &[usize]) -> Result<Jet> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "eval_jet needs a scalar output, network has {}",
                self.output_dim()
            )));
        }
        let inputs = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.forward(&inputs, coords)?.jet(0, 0))
    }

    /// Batched forward pass. `inputs` holds one point per row.
    pub fn forward(&self, inputs: &Array2<f64>, coords: &[usize]) -> Result<Forward> {
        let d = self.input_dim();
        if inputs.ncols() != d {
            return Err(Error::Shape(format!(
                "network takes {d} inputs, points have {}",
                inputs.ncols()
            )));
        }
        if let Some(&bad) = coords.iter().find(|&&c| c >= d) {
            return Err(Error::Shape(format!(
                "derivative coordinate {bad} out of range for {d} inputs"
            )));
        }
        let n = inputs.nrows();
        let c = coords.len();
        let cols = n * (1 + 2 * c);

        let mut stack = Array2::<f64>::zeros((d, cols));
        for p in 0..n {
            for j in 0..d {
                stack[[j, p]] = (inputs[[p, j]] - self.input_offset[j]) * self.input_scale[j];
            }
        }
        for (k, &coord) in coords.iter().enumerate() {
            stack
                .slice_mut(s![coord, (1 + k) * n..(2 + k) * n])
                .fill(self.input_scale[coord]);
        }

        let last = self.layers.len() - 1;
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut pre = Array2::<f64>::zeros((layer.outputs(), cols));
            general_mat_mul(1.0, &layer.weights, &stack, 0.0, &mut pre);
            for (r, mut row) in pre.rows_mut().into_iter().enumerate() {
                let b = layer.bias[r];
                for v in row.slice_mut(s![..n]).iter_mut() {
                    *v += b;
                }
            }
            let next = if l == last {
                pre.clone()
            } else {
                self.activate(&pre, n, c)
            };
            caches.push(LayerCache { input: stack, pre });
            stack = next;
        }
        if !stack.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite network output".into()));
        }
        Ok(Forward {
            points: n,
            ncoords: c,
            output: stack,
            caches,
        })
    }

    fn activate(&self, pre: &Array2<f64>, n: usize, c: usize) -> Array2<f64> {
        let mut post = Array2::<f64>::zeros(pre.raw_dim());
        for r in 0..pre.nrows() {
            let zrow = pre.row(r);
            let z = zrow.as_slice().expect("row-major");
            let mut arow = post.row_mut(r);
            let a = arow.as_slice_mut().expect("row-major");
            for p in 0..n {
                let (act, s1, s2, _) = self.activation.derivatives(z[p]);
                a[p] = act;
                for k in 0..c {
                    let i1 = (1 + k) * n + p;
                    let i2 = (1 + c + k) * n + p;
                    let dz = z[i1];
                    a[i1] = s1 * dz;
                    a[i2] = s2 * dz * dz + s1 * z[i2];
                }
            }
        }
        post
    }

    /// Reverse sweep: parameter gradient of `sum(seeds * outputs)`.
    pub fn backward(&self, fwd: &Forward, seeds: &Seeds) -> Result<Vec<f64>> {
        if seeds.data.raw_dim() != fwd.output.raw_dim() {
            return Err(Error::Shape("seed layout does not match forward pass".into()));
        }
        let n = fwd.points;
        let c = fwd.ncoords;
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut upstream = seeds.data.clone();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let cache = &fwd.caches[l];
            // upstream holds the adjoint of this layer's output; map it through the activation.
            let g_pre = if l == self.layers.len() - 1 {
                upstream
            } else {
                self.activation_adjoint(&upstream, &cache.pre, &fwd.caches[l + 1].input, n, c)
            };
            let mut gw = Array2::<f64>::zeros(layer.weights.raw_dim());
            general_mat_mul(1.0, &g_pre, &cache.input.t(), 0.0, &mut gw);
            let gb: Vec<f64> = g_pre
                .rows()
                .into_iter()
                .map(|row| row.slice(s![..n]).sum())
                .collect();
            let mut block: Vec<f64> = gw.iter().copied().collect();
            block.extend(gb);
            grads.push(block);
            if l > 0 {
                let mut g_in = Array2::<f64>::zeros(cache.input.raw_dim());
                general_mat_mul(1.0, &layer.weights.t(), &g_pre, 0.0, &mut g_in);
                upstream = g_in;
            } else {
                upstream = Array2::zeros((0, 0));
            }
        }
        let _ = upstream;
        grads.reverse();
        let flat: Vec<f64> = grads.into_iter().flatten().collect();
        if let Some(i) = flat.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient for parameter {i}"
            )));
        }
        Ok(flat)
    }

    fn activation_adjoint(
        &self,
        g_post: &Array2<f64>,
        pre: &Array2<f64>,
        post: &Array2<f64>,
        n: usize,
        c: usize,
    ) -> Array2<f64> {
        let mut g_pre = Array2::<f64>::zeros(pre.raw_dim());
        for r in 0..pre.nrows() {
            let zrow = pre.row(r);
            let z = zrow.as_slice().expect("row-major");
            let arow = post.row(r);
            let a = arow.as_slice().expect("row-major");
            let grow = g_post.row(r);
            let g = grow.as_slice().expect("row-major");
            let mut orow = g_pre.row_mut(r);
            let out = orow.as_slice_mut().expect("row-major");
            for p in 0..n {
                let (s1, s2, s3) = self.activation.derivatives_from_output(a[p]);
                let mut gz = g[p] * s1;
                for k in 0..c {
                    let i1 = (1 + k) * n + p;
                    let i2 = (1 + c + k) * n + p;
                    let (dz, d2z) = (z[i1], z[i2]);
                    let (ga1, ga2) = (g[i1], g[i2]);
                    gz += ga1 * s2 * dz + ga2 * (s3 * dz * dz + s2 * d2z);
                    out[i1] = ga1 * s1 + ga2 * 2.0 * s2 * dz;
                    out[i2] = ga2 * s1;
                }
                out[p] = gz;
            }
        }
        g_pre
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(weight: f64, bias: f64) -> DenseNetwork {
        DenseNetwork::from_layers(vec![Layer {
            weights: Array2::from_elem((1, 1), weight),
            bias: Array1::from_elem(1, bias),
        }])
        .unwrap()
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(init_dense(&[3], 0), Err(Error::Config(_))));
        assert!(matches!(init_dense(&[], 0), Err(Error::Config(_))));
        assert!(matches!(init_dense(&[2, 0, 1], 0), Err(Error::Config(_))));
    }

    #[test]
    fn init_bound_and_count() {
        let net = init_dense(&[1, 1], 3).unwrap();
        assert!(net.layers()[0].weights[[0, 0]].abs() <= 3f64.sqrt());
        let net = init_dense(&[2, 45, 45, 1], 7).unwrap();
        assert_eq!(net.param_count(), 2251);
        assert_eq!(net.params().len(), 2251);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_dense(&[3, 8, 2], 11).unwrap();
        let b = init_dense(&[3, 8, 2], 11).unwrap();
        assert_eq!(a, b);
        let c = init_dense(&[3, 8, 2], 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn affine_identity_case() {
        assert_eq!(single(2.0, 1.0).eval(&[3.0]).unwrap(), vec![7.0]);
        let jet = single(2.5, 0.3).eval_jet(&[1.0], &[0]).unwrap();
        assert_eq!(jet.grad, vec![2.5]);
        assert_eq!(jet.hess_diag, vec![0.0]);
    }

    #[test]
    fn tanh_neuron_at_origin() {
        let net = DenseNetwork::from_layers(vec![
            Layer {
                weights: Array2::from_elem((1, 1), 1.0),
                bias: Array1::zeros(1),
            },
            Layer {
                weights: Array2::from_elem((1, 1), 1.0),
                bias: Array1::zeros(1),
            },
        ])
        .unwrap();
        let jet = net.eval_jet(&[0.0], &[0]).unwrap();
        assert_eq!(jet.value, 0.0);
        assert_eq!(jet.grad, vec![1.0]);
        assert_eq!(jet.hess_diag, vec![0.0]);
    }

    #[test]
    fn zero_network() {
        let mut net = init_dense(&[3, 5, 5, 1], 1).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.set_params(&zeros).unwrap();
        let jet = net.eval_jet(&[0.3, -1.0, 2.0], &[0, 2]).unwrap();
        assert_eq!(jet.value, 0.0);
        assert!(jet.grad.iter().chain(&jet.hess_diag).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let net = init_dense(&[2, 4, 1], 0).unwrap();
        assert!(matches!(net.eval(&[1.0]), Err(Error::Shape(_))));
        assert!(matches!(net.eval_jet(&[1.0, 2.0], &[2]), Err(Error::Shape(_))));
        let bad = DenseNetwork::from_layers(vec![
            Layer {
                weights: Array2::zeros((3, 2)),
                bias: Array1::zeros(3),
            },
            Layer {
                weights: Array2::zeros((1, 4)),
                bias: Array1::zeros(1),
            },
        ]);
        assert!(matches!(bad, Err(Error::Shape(_))));
    }

    #[test]
    fn batch_columns_do_not_interact() {
        let net = init_dense(&[2, 16, 16, 1], 5).unwrap();
        let pts = Array2::from_shape_fn((37, 2), |(i, j)| (i as f64 * 0.37 + j as f64).sin());
        let fwd = net.forward(&pts, &[0, 1]).unwrap();
        for p in 0..37 {
            let x = [pts[[p, 0]], pts[[p, 1]]];
            assert_eq!(net.eval(&x).unwrap()[0], fwd.value(0, p));
            assert_eq!(net.eval_jet(&x, &[0, 1]).unwrap(), fwd.jet(0, p));
        }
    }

    #[test]
    fn params_round_trip() {
        let mut net = init_dense(&[2, 3, 1], 9).unwrap();
        let p: Vec<f64> = (0..net.param_count()).map(|i| i as f64).collect();
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
        assert_eq!(net.layers()[0].weights[[1, 0]], 2.0);
        assert_eq!(net.layers()[0].bias[0], 6.0);
    }
}
