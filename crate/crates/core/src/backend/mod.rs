//! Completion and scoring services used for sampling, evaluation and
//! generation.

mod mock;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::BackendError;

pub use mock::{jaccard, MockBackend};

/// Default sampling temperature for candidate completions.
pub const DEFAULT_TEMPERATURE: f64 = 0.8;
/// Default nucleus threshold for candidate completions.
pub const DEFAULT_TOP_P: f64 = 0.95;
pub const DEFAULT_MAX_NEW_TOKENS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Number of completions requested.
    pub n: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
    pub max_new_tokens: usize,
}

impl SamplingParams {
    /// Single deterministic completion.
    pub fn greedy(max_new_tokens: usize) -> Self {
        Self { n: 1, temperature: 0.0, top_p: 1.0, seed: 0, max_new_tokens }
    }
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            n: 1,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            seed: 0,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
        }
    }
}

/// Per-token natural-log probabilities of a continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobs {
    tokens: Vec<String>,
    logprobs: Vec<f64>,
}

/// Positive log-probabilities up to this size are rounding noise and are clamped to 0.
const LOGPROB_SLACK: f64 = 1e-6;

impl TokenLogprobs {
    pub fn new(tokens: Vec<String>, mut logprobs: Vec<f64>) -> Result<Self, BackendError> {
        if tokens.len() != logprobs.len() {
            return Err(BackendError::Malformed(alloc::format!(
                "{} tokens but {} logprobs",
                tokens.len(),
                logprobs.len()
            )));
        }
        for lp in &mut logprobs {
            if lp.is_nan() || *lp > LOGPROB_SLACK {
                return Err(BackendError::Malformed(alloc::format!("invalid token logprob {lp}")));
            }
            *lp = lp.min(0.0);
        }
        Ok(Self { tokens, logprobs })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `exp(-mean(logprobs))`.
    pub fn perplexity(&self) -> Result<f64, BackendError> {
        if self.logprobs.is_empty() {
            return Err(BackendError::DegenerateInput("no tokens to score".into()));
        }
        let mean = self.logprobs.iter().sum::<f64>() / self.logprobs.len() as f64;
        Ok(libm::exp(-mean))
    }
}

/// A text-completion service.
///
/// Implementations must be safe to call from several threads when shared
/// by reference.
pub trait CompletionBackend {
    /// `params.n` completions of `prompt`.
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<Vec<String>, BackendError>;

    /// Log-probabilities of the tokens of `continuation` following `context`.
    fn score_continuation(&self, context: &str, continuation: &str) -> Result<TokenLogprobs, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<Vec<String>, BackendError> {
        (**self).complete(prompt, params)
    }

    fn score_continuation(&self, context: &str, continuation: &str) -> Result<TokenLogprobs, BackendError> {
        (**self).score_continuation(context, continuation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perplexity_of_two_tokens() {
        let lp = TokenLogprobs::new(vec!["a".into(), "b".into()], vec![-0.5, -0.5]).unwrap();
        assert!((lp.perplexity().unwrap() - libm::exp(0.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed() {
        assert!(TokenLogprobs::new(vec!["a".into()], vec![]).is_err());
        assert!(TokenLogprobs::new(vec!["a".into()], vec![0.3]).is_err());
        assert!(TokenLogprobs::new(vec!["a".into()], vec![f64::NAN]).is_err());
        let ok = TokenLogprobs::new(vec!["a".into()], vec![1e-9]).unwrap();
        assert_eq!(ok.logprobs(), &[0.0]);
        let empty = TokenLogprobs::new(vec![], vec![]).unwrap();
        assert!(empty.perplexity().is_err());
    }
}
