//! Adaptive-moment (Adam) optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::DenseNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

pub type Adam = OptimizerState;

impl OptimizerState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        OptimizerState {
            config,
            step: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn for_network(net: &DenseNetwork, config: AdamConfig) -> Self {
        Self::new(net.param_count(), config)
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    /// One update over parameter blocks laid out consecutively in `grads`.
    pub fn step_blocks(&mut self, blocks: Vec<&mut [f64]>, grads: &[f64]) -> Result<()> {
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        if total != grads.len() || total != self.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters; got {} parameters and {} gradients",
                self.len(),
                total,
                grads.len()
            )));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let mut i = 0;
        for block in blocks {
            for p in block.iter_mut() {
                let g = grads[i];
                let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
                let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
                self.first_moment[i] = m;
                self.second_moment[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                i += 1;
            }
        }
        Ok(())
    }

    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step_blocks(vec![params], grads)
    }
}

/// Apply one Adam update to every parameter of `net`.
pub fn optimizer_step(
    net: &mut DenseNetwork,
    grads: &[f64],
    state: &mut OptimizerState,
) -> Result<()> {
    state.step_blocks(net.param_blocks_mut(), grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::init_dense;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = init_dense(&[2, 4, 1], 1).unwrap();
        let before = net.params();
        let mut state = OptimizerState::for_network(&net, AdamConfig::default());
        optimizer_step(&mut net, &vec![0.0; before.len()], &mut state).unwrap();
        assert_eq!(net.params(), before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_is_normalized() {
        let cfg = AdamConfig::default();
        let mut state = OptimizerState::new(3, cfg);
        let mut p = vec![1.0, 1.0, 1.0];
        let g = [0.5, -2.0, 1e-9];
        state.step_slice(&mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            // m_hat = g, v_hat = g^2
            let expected = 1.0 - 1e-3 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15, "{pi} vs {expected}");
        }
    }

    #[test]
    fn second_step_hand_calculation() {
        let mut state = OptimizerState::new(1, AdamConfig::default());
        let mut p = [0.0];
        state.step_slice(&mut p, &[1.0]).unwrap();
        state.step_slice(&mut p, &[3.0]).unwrap();
        let m = 0.9 * 0.1 + 0.1 * 3.0;
        let v = 0.999 * 0.001 + 0.001 * 9.0;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64 * 0.999);
        let expected = -1e-3 / (1.0 + 1e-8) - 1e-3 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert_eq!(state.step, 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut state = OptimizerState::new(2, AdamConfig::default());
        let mut p = [0.0; 3];
        assert!(matches!(state.step_slice(&mut p, &[0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut net = init_dense(&[1, 3, 1], 2).unwrap();
            let mut state = OptimizerState::for_network(&net, AdamConfig::default());
            for i in 0..10 {
                let g: Vec<f64> = (0..net.param_count())
                    .map(|j| ((i * 7 + j) as f64).sin())
                    .collect();
                optimizer_step(&mut net, &g, &mut state).unwrap();
            }
            net.params()
        };
        assert_eq!(run(), run());
    }
}
