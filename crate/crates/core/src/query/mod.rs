//! Prompt construction, candidate sampling, enhanced queries and the
//! multi-sampling utility model.

mod enhance;
mod prompt;
pub mod theory;

pub use enhance::{
    build_enhanced_query, sample_candidates, truncate_candidate, CandidateCompletion, EnhancedQuery,
    DEFAULT_SAMPLING_K, DEFAULT_TAIL_LINES,
};
pub use prompt::{
    build_prompt, estimate_tokens, render_prompt, split_prompt, CompletionPrompt, ParsedPrompt, TAIL_KEEP_LINES,
};
pub use theory::SamplingTheoryParams;
