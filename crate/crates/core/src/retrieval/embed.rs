//! Trainable dense embedder: a linear projection of hashed token features.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::hashing::{fnv1a64, hash_text, SparseVec};
use crate::{Error, Result};

pub const DEFAULT_DIM: usize = 128;
pub const DEFAULT_BUCKETS: usize = 4096;

/// Projection matrix `W` (`dim x buckets`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderParams {
    dim: usize,
    buckets: usize,
    weights: Vec<f64>,
}

impl EmbedderParams {
    pub fn new(dim: usize, buckets: usize, weights: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("embedding dim must be >= 2, got {dim}")));
        }
        if buckets < dim {
            return Err(Error::InvalidParameter(format!("buckets ({buckets}) must be >= dim ({dim})")));
        }
        if weights.len() != dim * buckets {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights for {dim}x{buckets}, got {}",
                dim * buckets,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite".into()));
        }
        Ok(Self { dim, buckets, weights })
    }

    /// Entries i.i.d. uniform in `[-a, a]` with `a = sqrt(6 / (dim + buckets))`.
    pub fn random_init<R: Rng + ?Sized>(dim: usize, buckets: usize, rng: &mut R) -> Result<Self> {
        let a = libm::sqrt(6.0 / (dim + buckets) as f64);
        let weights = (0..dim * buckets).map(|_| rng.random_range(-a..=a)).collect();
        Self::new(dim, buckets, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mutable access for optimisers; callers must keep entries finite.
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.buckets + col]
    }

    /// Checksum of the shape and exact weight bits.
    pub fn version(&self) -> String {
        let mut bytes = Vec::with_capacity(16 + 8 * self.weights.len());
        bytes.extend_from_slice(&(self.dim as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.buckets as u64).to_le_bytes());
        for w in &self.weights {
            bytes.extend_from_slice(&w.to_bits().to_le_bytes());
        }
        format!("{:016x}", fnv1a64(&bytes))
    }

    /// `W h` for sparse `h`.
    pub fn project(&self, features: &SparseVec) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, slot) in out.iter_mut().enumerate() {
            let base = row * self.buckets;
            *slot = features.iter().map(|(col, v)| self.weights[base + col] * v).sum();
        }
        out
    }

    pub fn embed_features(&self, features: &SparseVec) -> Embedding {
        Embedding::from_projection(self.project(features))
    }
}

/// Unit-length embedding, or the zero vector flagged degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Projections shorter than this are treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

impl Embedding {
    pub fn from_projection(mut values: Vec<f64>) -> Self {
        let norm = libm::sqrt(values.iter().map(|x| x * x).sum());
        if norm < DEGENERATE_NORM {
            values.iter_mut().for_each(|x| *x = 0.0);
            return Self { values, degenerate: true };
        }
        values.iter_mut().for_each(|x| *x /= norm);
        Self { values, degenerate: false }
    }
}

pub fn embed(params: &EmbedderParams, text: &str) -> Embedding {
    params.embed_features(&hash_text(text, params.buckets))
}

/// Cosine of two embeddings; 0 whenever either side is degenerate.
pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    if a.degenerate || b.degenerate {
        return 0.0;
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0)
}

/// `1 - cos(embed(a), embed(b))`, in `[0, 2]`.
pub fn semantic_gap(params: &EmbedderParams, text_a: &str, text_b: &str) -> f64 {
    (1.0 - cosine(&embed(params, text_a), &embed(params, text_b))).max(0.0)
}
