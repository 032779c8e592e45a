use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed input/response pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        if inputs.len() != responses.len() {
            return Err(Error::Shape(format!(
                "{} inputs for {} responses",
                inputs.len(),
                responses.len()
            )));
        }
        Ok(Dataset { inputs, responses })
    }

    /// Dataset with scalar inputs.
    pub fn scalar(xs: &[f64], zs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), zs.to_vec())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs
            .iter()
            .map(Vec::as_slice)
            .zip(self.responses.iter().copied())
    }
}
