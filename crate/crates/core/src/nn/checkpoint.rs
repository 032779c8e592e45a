//! JSON checkpoints for dense networks.
//!
//! Floats are written with the shortest representation that parses back to the
//! same double, so save/load is value-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::nn::network::{Activation, DenseNetwork, Layer};
use crate::nn::optim::OptimizerState;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    /// Per layer, rows of the (outputs x inputs) weight matrix.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_scale: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_state: Option<OptimizerState>,
    /// Extension fields written by callers (problem id, boxes, training config...).
    #[serde(flatten)]
    pub metadata: Map<String, Value>,
}

impl Checkpoint {
    pub fn from_network(net: &DenseNetwork) -> Self {
        let identity = net.input_offset().iter().all(|&o| o == 0.0)
            && net.input_scale().iter().all(|&s| s == 1.0);
        Checkpoint {
            format_version: FORMAT_VERSION,
            layer_dims: net.layer_dims(),
            activation: net.activation(),
            weights: net
                .layers()
                .iter()
                .map(|l| l.weights.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
            biases: net.layers().iter().map(|l| l.bias.to_vec()).collect(),
            input_offset: (!identity).then(|| net.input_offset().to_vec()),
            input_scale: (!identity).then(|| net.input_scale().to_vec()),
            optimizer_state: None,
            metadata: Map::new(),
        }
    }

    pub fn with_optimizer(mut self, state: OptimizerState) -> Self {
        self.optimizer_state = Some(state);
        self
    }

    pub fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn meta(&self, key: &str) -> Option<&Value> {
        self.metadata.get(key)
    }

    pub fn to_network(&self) -> Result<DenseNetwork> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint format_version {}",
                self.format_version
            )));
        }
        if self.weights.len() + 1 != self.layer_dims.len() || self.biases.len() != self.weights.len()
        {
            return Err(Error::Shape("checkpoint layer count mismatch".into()));
        }
        let mut layers = Vec::with_capacity(self.weights.len());
        for (l, (rows, bias)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
                return Err(Error::Shape(format!(
                    "checkpoint layer {l} is not {fan_out}x{fan_in}"
                )));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let weights = Array2::from_shape_vec((fan_out, fan_in), flat)
                .map_err(|e| Error::Shape(e.to_string()))?;
            layers.push(Layer {
                weights,
                bias: Array1::from_vec(bias.clone()),
            });
        }
        let mut net = DenseNetwork::from_layers(layers)?.with_activation(self.activation);
        if let (Some(offset), Some(scale)) = (&self.input_offset, &self.input_scale) {
            net = net.with_input_normalization(offset.clone(), scale.clone())?;
        }
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
