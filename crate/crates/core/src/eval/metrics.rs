//! Exact match, edit similarity and EM@k.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// 1 when the predictions agree after trimming outer whitespace.
pub fn exact_match(prediction: &str, groundtruth: &str) -> u8 {
    u8::from(prediction.trim() == groundtruth.trim())
}

/// Character-level Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diagonal + usize::from(ca != cb)).min(above + 1).min(row[j] + 1);
            diagonal = above;
        }
    }
    row[b.len()]
}

/// `1 - lev(p, g) / max(|p|, |g|)` over trimmed strings, in characters.
pub fn edit_similarity(prediction: &str, groundtruth: &str) -> f64 {
    let (p, g) = (prediction.trim(), groundtruth.trim());
    let longest = p.chars().count().max(g.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(p, g) as f64 / longest as f64
}

/// 1 when any of the first `k` predictions is an exact match.
pub fn em_at_k<S: AsRef<str>>(predictions: &[S], groundtruth: &str, k: usize) -> Result<u8> {
    if k == 0 || k > predictions.len() {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", predictions.len())));
    }
    Ok(u8::from(predictions[..k].iter().any(|p| exact_match(p.as_ref(), groundtruth) == 1)))
}
