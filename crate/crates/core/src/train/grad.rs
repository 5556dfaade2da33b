//! Analytic gradient of the reward with respect to the projection matrix.
//!
//! With `u = W h`, `e = u / |u|` and `s_i = e_i . e_q`:
//!
//! ```text
//! ds_i/dW = ((e_q - s_i e_i) / |u_i|) h_i^T + ((e_i - s_i e_q) / |u_q|) h_q^T
//! ```
//!
//! Degenerate embeddings (projection norm below the threshold) have a
//! constant zero score and contribute nothing.

use alloc::vec;
use alloc::vec::Vec;

use crate::retrieval::embed::DEGENERATE_NORM;
use crate::retrieval::{EmbedderParams, SparseVec};

/// Projection with its norm, for reuse between scoring and differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub unit: Vec<f64>,
    pub norm: f64,
}

impl Projected {
    pub fn new(params: &EmbedderParams, features: &SparseVec) -> Self {
        let mut unit = params.project(features);
        let norm = libm::sqrt(unit.iter().map(|x| x * x).sum());
        if norm < DEGENERATE_NORM {
            unit.iter_mut().for_each(|x| *x = 0.0);
        } else {
            unit.iter_mut().for_each(|x| *x /= norm);
        }
        Self { unit, norm }
    }

    pub fn is_degenerate(&self) -> bool {
        self.norm < DEGENERATE_NORM
    }

    /// Cosine with the same conventions as [`crate::retrieval::cosine`].
    pub fn cosine(&self, other: &Projected) -> f64 {
        if self.is_degenerate() || other.is_degenerate() {
            return 0.0;
        }
        let dot: f64 = self.unit.iter().zip(&other.unit).map(|(a, b)| a * b).sum();
        dot.clamp(-1.0, 1.0)
    }
}

fn add_outer(grad: &mut [f64], buckets: usize, column: &[f64], features: &SparseVec) {
    for (row, &c) in column.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let base = row * buckets;
        for (col, h) in features.iter() {
            grad[base + col] += c * h;
        }
    }
}

/// `sum_i grad_scores[i] * ds_i/dW`, row-major like the weights.
pub fn score_gradient_wrt_params(
    params: &EmbedderParams,
    snippet_features: &[SparseVec],
    query_features: &SparseVec,
    grad_scores: &[f64],
) -> Vec<f64> {
    assert_eq!(snippet_features.len(), grad_scores.len(), "one score gradient per snippet");
    let (dim, buckets) = (params.dim(), params.buckets());
    let mut grad = vec![0.0; dim * buckets];
    let q = Projected::new(params, query_features);
    if q.is_degenerate() {
        return grad;
    }
    let mut query_column = vec![0.0; dim];
    for (features, &g) in snippet_features.iter().zip(grad_scores) {
        let p = Projected::new(params, features);
        if p.is_degenerate() || g == 0.0 {
            continue;
        }
        let s = p.cosine(&q);
        let column: Vec<f64> = (0..dim).map(|r| g * (q.unit[r] - s * p.unit[r]) / p.norm).collect();
        add_outer(&mut grad, buckets, &column, features);
        for ((acc, pu), qu) in query_column.iter_mut().zip(&p.unit).zip(&q.unit) {
            *acc += g * (pu - s * qu) / q.norm;
        }
    }
    add_outer(&mut grad, buckets, &query_column, query_features);
    grad
}

pub fn l2_norm(values: &[f64]) -> f64 {
    libm::sqrt(values.iter().map(|x| x * x).sum())
}
