//! Perplexity-derived reward for aligning the retriever.
//!
//! For an enhanced query `q`, candidate snippets `c_1..c_n` and target code
//! `t`, the snippet with minimal `PPL(t | c_i, q)` is the "correct" one and
//! the reward is the log-softmax of the retriever's cosine scores at that
//! snippet.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::CompletionBackend;
use crate::corpus::Snippet;
use crate::query::{render_prompt, EnhancedQuery};
use crate::retrieval::{cosine, embed, EmbedderParams};
use crate::{Error, Language, Result};

/// Default number of candidate snippets per reward sample.
pub const DEFAULT_REWARD_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub query: EnhancedQuery,
    pub snippets: Vec<Snippet>,
    pub target: String,
    pub language: Language,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub ppls: Vec<f64>,
    pub mp_index: usize,
    pub scores: Vec<f64>,
    pub softmax: Vec<f64>,
    pub reward: f64,
    pub grad_scores: Vec<f64>,
}

/// Snippet framed above the unfinished code, exactly as in generation prompts.
pub fn ppl_context(query: &EnhancedQuery, snippet: &Snippet, language: Language) -> String {
    render_prompt(&[(&snippet.origin_path, &snippet.text)], &query.unfinished_code, language)
}

/// `exp(-(1/L) sum_j log P(t_j | c_i, q, t_<j))` with `L` the number of
/// target tokens under the backend's tokenisation.
pub fn conditional_ppl(
    backend: &dyn CompletionBackend,
    query: &EnhancedQuery,
    snippet: &Snippet,
    target: &str,
    language: Language,
) -> Result<f64> {
    if target.trim().is_empty() {
        return Err(Error::InvalidInput("target code is empty".into()));
    }
    let logprobs = backend.score_continuation(&ppl_context(query, snippet, language), target)?;
    Ok(logprobs.perplexity()?)
}

/// Index of the minimal perplexity; the lowest index wins ties.
pub fn select_mp(ppls: &[f64]) -> Result<usize> {
    if ppls.is_empty() {
        return Err(Error::InvalidInput("no perplexities to compare".into()));
    }
    if ppls.iter().any(|p| p.is_nan()) {
        return Err(Error::InvalidInput("perplexity is NaN".into()));
    }
    let mut best = 0;
    for (i, &p) in ppls.iter().enumerate().skip(1) {
        if p < ppls[best] {
            best = i;
        }
    }
    Ok(best)
}

fn check_scores(scores: &[f64], mp_index: usize) -> Result<()> {
    if mp_index >= scores.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "mp index {mp_index} out of range for {} scores",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    Ok(())
}

/// Softmax with max subtraction.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `log(exp(s_mp) / sum_j exp(s_j))`, never positive.
pub fn reward(scores: &[f64], mp_index: usize) -> Result<f64> {
    check_scores(scores, mp_index)?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = scores.iter().map(|s| libm::exp(s - max)).sum();
    Ok((scores[mp_index] - max) - libm::log(total))
}

/// `d reward / d s_j = [j == mp] - softmax_j`.
pub fn reward_gradient_wrt_scores(scores: &[f64], mp_index: usize) -> Result<Vec<f64>> {
    check_scores(scores, mp_index)?;
    let mut grad: Vec<f64> = softmax(scores).into_iter().map(|p| -p).collect();
    grad[mp_index] += 1.0;
    Ok(grad)
}

/// Perplexity of the target under every candidate snippet.
pub fn snippet_ppls(backend: &dyn CompletionBackend, sample: &RewardSample) -> Result<Vec<f64>> {
    if sample.snippets.is_empty() {
        return Err(Error::InvalidInput("reward sample has no snippets".into()));
    }
    sample
        .snippets
        .iter()
        .map(|s| conditional_ppl(backend, &sample.query, s, &sample.target, sample.language))
        .collect()
}

/// Scores `s_i = cos(emb(c_i), emb(q))` given perplexities already computed.
pub fn breakdown_from_ppls(params: &EmbedderParams, sample: &RewardSample, ppls: Vec<f64>) -> Result<RewardBreakdown> {
    let mp_index = select_mp(&ppls)?;
    let q = embed(params, &sample.query.rendered);
    let scores: Vec<f64> = sample.snippets.iter().map(|s| cosine(&embed(params, &s.text), &q)).collect();
    Ok(RewardBreakdown {
        softmax: softmax(&scores),
        reward: reward(&scores, mp_index)?,
        grad_scores: reward_gradient_wrt_scores(&scores, mp_index)?,
        ppls,
        mp_index,
        scores,
    })
}

/// Full reward evaluation of one sample. Any perplexity failure is returned
/// so the caller can skip the sample.
pub fn evaluate_sample(
    backend: &dyn CompletionBackend,
    params: &EmbedderParams,
    sample: &RewardSample,
) -> Result<RewardBreakdown> {
    let ppls = snippet_ppls(backend, sample)?;
    breakdown_from_ppls(params, sample, ppls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{MockBackend, SamplingParams, TokenLogprobs};
    use crate::corpus::SnippetKind;
    use crate::query::build_enhanced_query;
    use crate::BackendError;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Returns fixed logprobs regardless of input.
    struct Fixed(Vec<f64>);

    impl CompletionBackend for Fixed {
        fn complete(&self, _: &str, _: &SamplingParams) -> core::result::Result<Vec<String>, BackendError> {
            Ok(vec![])
        }
        fn score_continuation(&self, _: &str, _: &str) -> core::result::Result<TokenLogprobs, BackendError> {
            TokenLogprobs::new(self.0.iter().map(|_| String::from("t")).collect(), self.0.clone())
        }
    }

    fn snippet(id: &str, text: &str) -> Snippet {
        Snippet {
            id: id.into(),
            kind: SnippetKind::Base,
            origin_path: format!("{id}.py"),
            span: None,
            text: text.into(),
            line_count: 1,
        }
    }

    fn query() -> EnhancedQuery {
        build_enhanced_query("result = engine.", vec![], 10)
    }

    #[test]
    fn ppl_cases() {
        let s = snippet("a", "x");
        let q = query();
        let lang = Language::Python;
        assert_eq!(conditional_ppl(&Fixed(vec![0.0, 0.0]), &q, &s, "t", lang).unwrap(), 1.0);
        let uniform = libm::log(1.0 / 8.0);
        assert!((conditional_ppl(&Fixed(vec![uniform; 5]), &q, &s, "t", lang).unwrap() - 8.0).abs() < 1e-12);
        let p = conditional_ppl(&Fixed(vec![-0.1, -0.3]), &q, &s, "t", lang).unwrap();
        assert!((p - 1.221_402_758_160_17).abs() < 1e-12);
        assert!(conditional_ppl(&Fixed(vec![-0.1]), &q, &s, " ", lang).is_err());
    }

    #[test]
    fn select_mp_cases() {
        assert_eq!(select_mp(&[2.0, 1.5, 1.5]).unwrap(), 1);
        assert_eq!(select_mp(&[3.0]).unwrap(), 0);
        assert!(select_mp(&[1.0, f64::NAN]).is_err());
        assert!(select_mp(&[]).is_err());
    }

    #[test]
    fn select_mp_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(1..5u8))).collect();
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let expected = v.iter().position(|&x| x == min).unwrap();
            assert_eq!(select_mp(&v).unwrap(), expected);
        }
    }

    #[test]
    fn reward_cases() {
        assert_eq!(reward(&[3.7], 0).unwrap(), 0.0);
        assert!((reward(&[0.0, 0.0], 0).unwrap() - libm::log(0.5)).abs() < 1e-15);
        let expected = libm::log(libm::exp(5.0) / (libm::exp(5.0) + 1.0));
        assert!((reward(&[5.0, 0.0], 0).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.006_715_348_489_118).abs() < 1e-12);
        assert!(reward(&[0.0], 1).is_err());
    }

    #[test]
    fn gradient_cases() {
        assert_eq!(reward_gradient_wrt_scores(&[0.0, 0.0], 0).unwrap(), vec![0.5, -0.5]);
        assert_eq!(reward_gradient_wrt_scores(&[1.0], 0).unwrap(), vec![0.0]);
    }

    #[test]
    fn mock_sample_prefers_covering_snippet() {
        let sample = RewardSample {
            query: query(),
            snippets: vec![snippet("good", "def compute_total(items):"), snippet("bad", "import os")],
            target: "compute_total(items)".into(),
            language: Language::Python,
        };
        let p = EmbedderParams::random_init(8, 32, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = evaluate_sample(&MockBackend, &p, &sample).unwrap();
        assert_eq!(b.mp_index, 0);
        assert_eq!(b.ppls[0], 1.0);
    }

    #[test]
    fn identical_snippets_give_uniform_softmax() {
        let sample = RewardSample {
            query: query(),
            snippets: vec![snippet("a", "engine.run()"), snippet("b", "engine.run()"), snippet("c", "engine.run()")],
            target: "run()".into(),
            language: Language::Python,
        };
        let p = EmbedderParams::random_init(8, 32, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = evaluate_sample(&MockBackend, &p, &sample).unwrap();
        assert!(b.softmax.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-12));
        assert!((b.reward - libm::log(1.0 / 3.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn shift_invariance(scores in prop::collection::vec(-1.0f64..1.0, 1..8), shift in -50.0f64..50.0, mp in 0usize..8) {
            let mp = mp % scores.len();
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            prop_assert!((reward(&scores, mp).unwrap() - reward(&shifted, mp).unwrap()).abs() < 1e-9);
            prop_assert!(reward(&scores, mp).unwrap() <= 0.0);
            let g = reward_gradient_wrt_scores(&scores, mp).unwrap();
            prop_assert!(g.iter().sum::<f64>().abs() < 1e-9);
            prop_assert!((softmax(&scores).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn reward_monotone_in_scores(scores in prop::collection::vec(-1.0f64..1.0, 2..8), mp in 0usize..8, j in 0usize..8, bump in 0.01f64..1.0) {
            let mp = mp % scores.len();
            let j = j % scores.len();
            let base = reward(&scores, mp).unwrap();
            let mut moved = scores.clone();
            moved[j] += bump;
            let after = reward(&moved, mp).unwrap();
            if j == mp { prop_assert!(after > base); } else { prop_assert!(after < base); }
        }

        #[test]
        fn select_mp_invariant_under_monotone_transform(ppls in prop::collection::vec(1.0f64..3.0, 1..10)) {
            let transformed: Vec<f64> = ppls.iter().map(|p| libm::exp(2.0 * p) + 1.0).collect();
            prop_assert_eq!(select_mp(&ppls).unwrap(), select_mp(&transformed).unwrap());
        }

        #[test]
        fn gradient_matches_finite_differences(scores in prop::collection::vec(-1.0f64..1.0, 1..8), mp in 0usize..8) {
            let mp = mp % scores.len();
            let g = reward_gradient_wrt_scores(&scores, mp).unwrap();
            let h = 1e-5;
            for j in 0..scores.len() {
                let mut up = scores.clone();
                up[j] += h;
                let mut down = scores.clone();
                down[j] -= h;
                let fd = (reward(&up, mp).unwrap() - reward(&down, mp).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1e-3));
            }
        }
    }
}
