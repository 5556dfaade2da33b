use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::CompletionPrompt;
use crate::backend::{CompletionBackend, SamplingParams};
use crate::{Error, Result};

/// Default number of sampled candidate completions.
pub const DEFAULT_SAMPLING_K: usize = 4;
/// Trailing lines of unfinished code kept in the enhanced query.
pub const DEFAULT_TAIL_LINES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCompletion {
    pub text: String,
    pub sample_index: usize,
    #[serde(default)]
    pub backend_meta: BTreeMap<String, String>,
}

/// Keep the first line and everything up to the next blank line.
pub fn truncate_candidate(text: &str) -> String {
    let mut out = String::new();
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            if line.trim().is_empty() {
                break;
            }
            out.push('\n');
        }
        out.push_str(line);
    }
    String::from(out.trim_end())
}

/// `k` candidate completions of `prompt`. Duplicates are kept: repeated
/// candidates weigh more in the rendered query.
pub fn sample_candidates(
    backend: &dyn CompletionBackend,
    prompt: &CompletionPrompt,
    k: usize,
    temperature: f64,
    top_p: f64,
    seed: u64,
    max_new_tokens: usize,
) -> Result<Vec<CandidateCompletion>> {
    if k < 1 {
        return Err(Error::InvalidParameter("sampling number must be at least 1".into()));
    }
    let params = SamplingParams { n: k, temperature, top_p, seed, max_new_tokens };
    let texts = backend
        .complete(&prompt.rendered, &params)
        .map_err(|source| Error::BackendUnavailable { completed: 0, requested: k, source })?;
    if texts.len() < k {
        return Err(Error::BackendUnavailable {
            completed: texts.len(),
            requested: k,
            source: crate::BackendError::Malformed(alloc::format!("expected {k} completions")),
        });
    }
    Ok(texts
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(sample_index, text)| CandidateCompletion {
            text: truncate_candidate(&text),
            sample_index,
            backend_meta: BTreeMap::new(),
        })
        .collect())
}

/// Unfinished-code tail plus sampled candidates, rendered as retrieval text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedQuery {
    pub unfinished_code: String,
    pub candidates: Vec<CandidateCompletion>,
    pub tail_lines: usize,
    pub rendered: String,
}

impl EnhancedQuery {
    pub fn render(unfinished_code: &str, candidates: &[CandidateCompletion], tail_lines: usize) -> String {
        let lines: Vec<&str> = unfinished_code.lines().collect();
        let mut rendered = lines[lines.len().saturating_sub(tail_lines)..].join("\n");
        if candidates.is_empty() {
            return rendered;
        }
        let mut ordered: Vec<&CandidateCompletion> = candidates.iter().collect();
        ordered.sort_by_key(|c| c.sample_index);
        rendered.push_str("\n\n");
        let texts: Vec<&str> = ordered.iter().map(|c| c.text.as_str()).collect();
        rendered.push_str(&texts.join("\n"));
        rendered
    }
}

/// The last `tail_lines` lines of the unfinished code, a blank line, then
/// the candidates in sample order. Without candidates this is just the
/// tail, which is also the query used when enhancement is disabled.
pub fn build_enhanced_query(unfinished_code: &str, candidates: Vec<CandidateCompletion>, tail_lines: usize) -> EnhancedQuery {
    let rendered = EnhancedQuery::render(unfinished_code, &candidates, tail_lines);
    EnhancedQuery { unfinished_code: String::from(unfinished_code), candidates, tail_lines, rendered }
}
