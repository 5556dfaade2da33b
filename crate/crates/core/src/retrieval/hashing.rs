//! Feature hashing of token bags.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Identifier stored in embedder checkpoints; bump when the hash changes.
pub const HASH_VERSION: &str = "fnv1a64-v1";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Byte-order independent, so bucket assignment is identical
/// on every platform.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn bucket_of(token: &str, buckets: usize) -> usize {
    (fnv1a64(token.as_bytes()) % buckets as u64) as usize
}

/// Sparse L2-normalised feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// A zero vector (no tokens) cannot be embedded meaningfully.
    pub fn is_degenerate(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Term-count vector of `tokens` under [`fnv1a64`] modulo `buckets`,
/// normalised to unit length.
pub fn hash_features<S: AsRef<str>>(tokens: &[S], buckets: usize) -> SparseVec {
    assert!(buckets >= 2, "hash_features needs at least two buckets");
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in tokens {
        *counts.entry(bucket_of(token.as_ref(), buckets)).or_insert(0.0) += 1.0;
    }
    let norm = libm::sqrt(counts.values().map(|c| c * c).sum::<f64>());
    let mut out = SparseVec::default();
    for (index, count) in counts {
        out.indices.push(index);
        out.values.push(count / norm);
    }
    out
}

pub fn hash_text(text: &str, buckets: usize) -> SparseVec {
    let tokens: Vec<String> = super::tokenize(text);
    hash_features(&tokens, buckets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn identical_texts_identical_vectors() {
        assert_eq!(hash_text("self.run(x)", 64), hash_text("self.run(x)", 64));
    }

    #[test]
    fn zero_tokens_is_degenerate() {
        let v = hash_features::<&str>(&[], 64);
        assert!(v.is_degenerate());
        assert!(v.to_dense(64).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_token_is_one_hot() {
        let v = hash_features(&["token"], 4096);
        assert_eq!(v.indices, vec![bucket_of("token", 4096)]);
        assert_eq!(v.values, vec![1.0]);
    }

    #[test]
    fn counts_are_normalised() {
        let v = hash_features(&["a", "a", "b"], 1 << 20);
        let norm: f64 = v.values.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let mut vals = v.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[1] / vals[0] - 2.0).abs() < 1e-12);
    }
}
