//! Deterministic stand-in for the sampler, evaluator and generator models.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CompletionBackend, SamplingParams, TokenLogprobs};
use crate::query::split_prompt;
use crate::retrieval::tokenize;
use crate::BackendError;

/// Pure-function backend driven by token overlap with the prompt's
/// context-snippet section.
///
/// * `complete`: the j-th sample is the snippet line with the
///   `(j + seed)`-th highest Jaccard overlap (over [`tokenize`] output) with
///   the last non-empty prompt line; ties keep corpus order, ranks wrap.
/// * `score_continuation`: one pseudo-token per whitespace-delimited word of
///   the continuation, each with log-probability `overlap - 1`, where
///   `overlap` is the fraction of continuation tokens present in the
///   context snippets. Perplexity is therefore `exp(1 - overlap)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MockBackend;

fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// `|A ∩ B| / |A ∪ B|`, defined as 0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

impl MockBackend {
    /// Snippet lines ordered by descending overlap with the prompt tail.
    pub fn ranked_lines(prompt: &str) -> Vec<String> {
        let parsed = split_prompt(prompt);
        let tail = prompt.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
        let tail_tokens = token_set(tail);
        let mut scored: Vec<(f64, usize, String)> = parsed
            .snippet_lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, line)| (jaccard(&token_set(line), &tail_tokens), i, line.to_string()))
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, _, line)| line).collect()
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<Vec<String>, BackendError> {
        if params.n == 0 {
            return Err(BackendError::InvalidParameter("at least one completion must be requested".into()));
        }
        let ranked = Self::ranked_lines(prompt);
        if ranked.is_empty() {
            return Ok(alloc::vec![String::new(); params.n]);
        }
        let offset = (params.seed % ranked.len() as u64) as usize;
        Ok((0..params.n).map(|j| ranked[(j + offset) % ranked.len()].clone()).collect())
    }

    fn score_continuation(&self, context: &str, continuation: &str) -> Result<TokenLogprobs, BackendError> {
        let words: Vec<String> = continuation.split_whitespace().map(String::from).collect();
        if words.is_empty() {
            return Err(BackendError::DegenerateInput("continuation has no tokens".into()));
        }
        let parsed = split_prompt(context);
        let mut context_tokens = BTreeSet::new();
        for line in parsed.snippet_lines() {
            context_tokens.extend(tokenize(line));
        }
        let target = token_set(continuation);
        let overlap = if target.is_empty() {
            0.0
        } else {
            target.intersection(&context_tokens).count() as f64 / target.len() as f64
        };
        let logprobs = alloc::vec![overlap - 1.0; words.len()];
        TokenLogprobs::new(words, logprobs)
    }
}
