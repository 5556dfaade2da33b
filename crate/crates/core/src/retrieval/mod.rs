//! Coarse (BM25) and fine (dense) retrieval over a snippet corpus.

pub mod bm25;
pub mod embed;
pub mod hashing;
mod index;
mod tokenize;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use bm25::{Bm25Params, Bm25Stats};
pub use embed::{cosine, embed, semantic_gap, EmbedderParams, Embedding};
pub use hashing::{hash_features, hash_text, SparseVec, HASH_VERSION};
pub use index::RetrievalIndex;
pub use tokenize::{token_spans, tokenize};

/// Default number of coarse (BM25) results.
pub const DEFAULT_COARSE_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub snippet_id: String,
    /// Position of the snippet in the index.
    pub index: usize,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Sort by descending score, ties by snippet id, and keep the first `k`.
pub(crate) fn top_k<'a>(scored: impl Iterator<Item = (usize, &'a str, f64)>, k: usize) -> Vec<RankedResult> {
    let mut all: Vec<(usize, &str, f64)> = scored.collect();
    all.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1)));
    all.into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (index, id, score))| RankedResult { snippet_id: String::from(id), index, score, rank: i + 1 })
        .collect()
}
