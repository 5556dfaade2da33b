//! Gradient-ascent optimisers.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grad::l2_norm;
use crate::retrieval::EmbedderParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
/// Global-norm clipping threshold.
pub const CLIP_NORM: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam { len } else { 0 };
        Self { kind, first: vec![0.0; moments], second: vec![0.0; moments], steps: 0 }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Clips `grad` to [`CLIP_NORM`] and moves `params` along it. Returns
    /// `false` without touching anything when the gradient is exactly zero
    /// or the learning rate is zero.
    pub fn ascend(&mut self, params: &mut EmbedderParams, grad: &mut [f64], learning_rate: f64) -> bool {
        assert_eq!(grad.len(), params.weights().len(), "gradient shape mismatch");
        let norm = l2_norm(grad);
        if norm == 0.0 || learning_rate == 0.0 || !norm.is_finite() {
            return false;
        }
        if norm > CLIP_NORM {
            let scale = CLIP_NORM / norm;
            grad.iter_mut().for_each(|g| *g *= scale);
        }
        self.steps += 1;
        let weights = params.weights_mut();
        match self.kind {
            OptimizerKind::Sgd => {
                for (w, g) in weights.iter_mut().zip(grad.iter()) {
                    *w += learning_rate * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as f64;
                let c1 = 1.0 - libm::pow(ADAM_BETA1, t);
                let c2 = 1.0 - libm::pow(ADAM_BETA2, t);
                for i in 0..weights.len() {
                    let g = grad[i];
                    self.first[i] = ADAM_BETA1 * self.first[i] + (1.0 - ADAM_BETA1) * g;
                    self.second[i] = ADAM_BETA2 * self.second[i] + (1.0 - ADAM_BETA2) * g * g;
                    let m = self.first[i] / c1;
                    let v = self.second[i] / c2;
                    weights[i] += learning_rate * m / (libm::sqrt(v) + ADAM_EPSILON);
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EmbedderParams {
        EmbedderParams::new(2, 2, alloc::vec![0.5, -0.25, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = params();
        let mut state = OptimizerState::new(OptimizerKind::Adam, 4);
        assert!(!state.ascend(&mut p, &mut [0.0; 4], 0.1));
        assert_eq!(p, params());
        assert_eq!(state.steps(), 0);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = params();
        let mut state = OptimizerState::new(OptimizerKind::Sgd, 4);
        assert!(!state.ascend(&mut p, &mut [1.0, 0.0, 0.0, 0.0], 0.0));
        assert_eq!(p, params());
    }

    #[test]
    fn sgd_clips_to_unit_norm() {
        let mut p = params();
        let mut state = OptimizerState::new(OptimizerKind::Sgd, 4);
        state.ascend(&mut p, &mut [3.0, 4.0, 0.0, 0.0], 1.0);
        assert!((p.weights()[0] - 1.1).abs() < 1e-12);
        assert!((p.weights()[1] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = params();
        let mut state = OptimizerState::new(OptimizerKind::Adam, 4);
        state.ascend(&mut p, &mut [0.1, -0.2, 0.0, 0.0], 0.01);
        assert!((p.weights()[0] - 0.51).abs() < 1e-6);
        assert!((p.weights()[1] + 0.26).abs() < 1e-6);
        assert_eq!(p.weights()[2], 1.0);
    }
}
