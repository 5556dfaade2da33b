//! End-to-end completion of benchmark tasks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{edit_similarity, em_at_k, exact_match};
use crate::backend::{CompletionBackend, SamplingParams, DEFAULT_MAX_NEW_TOKENS, DEFAULT_TEMPERATURE, DEFAULT_TOP_P};
use crate::corpus::{build_codebase, CodeParser, CodebaseConfig, Repo, Snippet, SourceFile, DEFAULT_MAX_LINES};
use crate::query::{build_enhanced_query, build_prompt, sample_candidates, EnhancedQuery, DEFAULT_SAMPLING_K, DEFAULT_TAIL_LINES};
use crate::retrieval::embed::{DEFAULT_BUCKETS, DEFAULT_DIM};
use crate::retrieval::{EmbedderParams, RetrievalIndex, DEFAULT_COARSE_K};
use crate::reward::DEFAULT_REWARD_N;
use crate::seed::{stream_rng, stream_seed, INIT, SAMPLER};
use crate::{Diagnostics, Error, Language, Result};

/// Token budget of sampling and generation prompts.
pub const DEFAULT_PROMPT_BUDGET: usize = 2048;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub no_dependency_context: bool,
    pub no_query_enhancement: bool,
    pub no_trained_retriever: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_lines: usize,
    pub coarse_k: usize,
    pub sampling_k: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
    pub tail_lines: usize,
    /// Snippets kept by fine retrieval (and per reward sample in training).
    pub reward_n: usize,
    pub fine_budget_tokens: usize,
    pub embed_dim: usize,
    pub embed_buckets: usize,
    pub ablation: AblationFlags,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_lines: DEFAULT_MAX_LINES,
            coarse_k: DEFAULT_COARSE_K,
            sampling_k: DEFAULT_SAMPLING_K,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            seed: 0,
            tail_lines: DEFAULT_TAIL_LINES,
            reward_n: DEFAULT_REWARD_N,
            fine_budget_tokens: DEFAULT_PROMPT_BUDGET,
            embed_dim: DEFAULT_DIM,
            embed_buckets: DEFAULT_BUCKETS,
            ablation: AblationFlags::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_lines", self.max_lines),
            ("coarse_k", self.coarse_k),
            ("sampling_k", self.sampling_k),
            ("max_new_tokens", self.max_new_tokens),
            ("tail_lines", self.tail_lines),
            ("reward_n", self.reward_n),
            ("fine_budget_tokens", self.fine_budget_tokens),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !(0.0..=2.0).contains(&self.temperature) || !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::InvalidConfig("temperature must be in [0, 2] and top_p in (0, 1]".into()));
        }
        if self.embed_dim < 2 || self.embed_buckets < self.embed_dim {
            return Err(Error::InvalidConfig("embedding needs dim >= 2 and buckets >= dim".into()));
        }
        Ok(())
    }

    /// The untrained embedder used without a checkpoint or for the
    /// untrained-retriever ablation.
    pub fn initial_params(&self) -> Result<EmbedderParams> {
        EmbedderParams::random_init(self.embed_dim, self.embed_buckets, &mut stream_rng(self.seed, INIT))
    }
}

/// Per-task sampling seed, independent of task order.
pub fn task_seed(master: u64, task_id: &str) -> u64 {
    stream_seed(stream_seed(master, SAMPLER), task_id)
}

/// Builds the codebase and the retrieval query for one completion. Without
/// query enhancement the query is the unfinished-code tail alone.
#[allow(clippy::too_many_arguments)]
pub fn enhance_query(
    repo: &Repo,
    completion_path: &str,
    unfinished_code: &str,
    language: Language,
    sampler: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    config: &PipelineConfig,
    seed: u64,
    diags: &mut Diagnostics,
) -> Result<(RetrievalIndex, EnhancedQuery)> {
    let codebase_config =
        CodebaseConfig { max_lines: config.max_lines, include_dependencies: !config.ablation.no_dependency_context };
    let snippets = build_codebase(repo, completion_path, Some(unfinished_code), &codebase_config, parser, diags)?;
    let index = RetrievalIndex::build(snippets);
    if config.ablation.no_query_enhancement {
        return Ok((index, build_enhanced_query(unfinished_code, Vec::new(), config.tail_lines)));
    }
    let coarse = index.bm25_retrieve(unfinished_code, config.coarse_k)?;
    let context: Vec<&Snippet> = coarse.iter().map(|r| index.snippet(r.index)).collect();
    let prompt = build_prompt(&context, unfinished_code, config.fine_budget_tokens, language)?;
    let candidates = sample_candidates(
        sampler,
        &prompt,
        config.sampling_k,
        config.temperature,
        config.top_p,
        seed,
        config.max_new_tokens,
    )?;
    Ok((index, build_enhanced_query(unfinished_code, candidates, config.tail_lines)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub task_id: String,
    pub files: Vec<SourceFile>,
    pub completion_file: String,
    pub unfinished_code: String,
    pub groundtruth: String,
}

impl BenchmarkTask {
    /// Language of the completion file, which must be among the task's files.
    pub fn language(&self) -> Result<Language> {
        if !self.files.iter().any(|f| f.path == self.completion_file) {
            return Err(Error::InvalidInput(format!("task {}: completion file missing from files", self.task_id)));
        }
        Language::from_path(&self.completion_file)
            .ok_or_else(|| Error::InvalidInput(format!("task {}: unsupported file {}", self.task_id, self.completion_file)))
    }

    pub fn validate(&self) -> Result<Language> {
        if self.groundtruth.trim().is_empty() {
            return Err(Error::InvalidInput(format!("task {}: empty groundtruth", self.task_id)));
        }
        self.language()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub prediction: String,
    pub query: EnhancedQuery,
    /// Ids of the fine-retrieved snippets that made it into the prompt.
    pub context_ids: Vec<String>,
}

/// Runs the full pipeline for one task and returns the generator's first line.
pub fn complete_task(
    task: &BenchmarkTask,
    sampler: &dyn CompletionBackend,
    generator: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    params: &EmbedderParams,
    config: &PipelineConfig,
    diags: &mut Diagnostics,
) -> Result<TaskOutcome> {
    let language = task.language()?;
    let repo = Repo::new(task.files.iter().cloned());
    let seed = task_seed(config.seed, &task.task_id);
    let (index, query) =
        enhance_query(&repo, &task.completion_file, &task.unfinished_code, language, sampler, parser, config, seed, diags)?;
    let index = index.with_embeddings(params);
    let fine = index.dense_retrieve(params, &query.rendered, config.reward_n)?;
    let context: Vec<&Snippet> = fine.iter().map(|r| index.snippet(r.index)).collect();
    let prompt = build_prompt(&context, &task.unfinished_code, config.fine_budget_tokens, language)?;
    let outputs = generator
        .complete(&prompt.rendered, &SamplingParams::greedy(config.max_new_tokens))
        .map_err(|source| Error::BackendUnavailable { completed: 0, requested: 1, source })?;
    let first = outputs.into_iter().next().unwrap_or_default();
    let prediction = first.split('\n').next().unwrap_or("").to_string();
    Ok(TaskOutcome { prediction, query, context_ids: prompt.context_ids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub prediction: String,
    pub em: u8,
    pub es: f64,
    /// Whether any sampled candidate matched, when candidates were sampled.
    pub em_at_k: Option<u8>,
    pub error: Option<String>,
}

/// Scores one task. Failures become a zero row with the error recorded.
pub fn run_task(
    task: &BenchmarkTask,
    sampler: &dyn CompletionBackend,
    generator: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    params: &EmbedderParams,
    config: &PipelineConfig,
    diags: &mut Diagnostics,
) -> TaskRow {
    let outcome = task.validate().and_then(|_| complete_task(task, sampler, generator, parser, params, config, diags));
    match outcome {
        Ok(outcome) => {
            let candidates: Vec<&str> = outcome.query.candidates.iter().map(|c| c.text.as_str()).collect();
            let em_at_k = if candidates.is_empty() {
                None
            } else {
                em_at_k(&candidates, &task.groundtruth, candidates.len()).ok()
            };
            TaskRow {
                task_id: task.task_id.clone(),
                em: exact_match(&outcome.prediction, &task.groundtruth),
                es: edit_similarity(&outcome.prediction, &task.groundtruth),
                prediction: outcome.prediction,
                em_at_k,
                error: None,
            }
        }
        Err(err) => {
            diags.warn(format!("task {}: {err}", task.task_id));
            TaskRow {
                task_id: task.task_id.clone(),
                prediction: String::new(),
                em: 0,
                es: 0.0,
                em_at_k: None,
                error: Some(err.to_string()),
            }
        }
    }
}

/// Percentages over all rows; `None` when there are no rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub tasks: usize,
    pub em: Option<f64>,
    pub es: Option<f64>,
    /// Over the rows that sampled candidates.
    pub em_at_k: Option<f64>,
}

impl Aggregates {
    pub fn from_rows(rows: &[TaskRow]) -> Self {
        let n = rows.len();
        let mean = |total: f64| if n == 0 { None } else { Some(total / n as f64 * 100.0) };
        let sampled: Vec<u8> = rows.iter().filter_map(|r| r.em_at_k).collect();
        Self {
            tasks: n,
            em: mean(rows.iter().map(|r| f64::from(r.em)).sum()),
            es: mean(rows.iter().map(|r| r.es).sum()),
            em_at_k: if sampled.is_empty() {
                None
            } else {
                Some(sampled.iter().map(|&v| f64::from(v)).sum::<f64>() / sampled.len() as f64 * 100.0)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub rows: Vec<TaskRow>,
    pub aggregates: Aggregates,
}

impl EvalReport {
    /// Sorts rows by task id and computes the aggregates.
    pub fn from_rows(config: PipelineConfig, mut rows: Vec<TaskRow>) -> Self {
        rows.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        let aggregates = Aggregates::from_rows(&rows);
        Self { config, rows, aggregates }
    }
}

/// Sequential benchmark run. `trained` is ignored under the
/// untrained-retriever ablation; without it the initial embedder is used.
pub fn run_benchmark(
    tasks: &[BenchmarkTask],
    sampler: &dyn CompletionBackend,
    generator: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    trained: Option<&EmbedderParams>,
    config: &PipelineConfig,
    diags: &mut Diagnostics,
) -> Result<EvalReport> {
    config.validate()?;
    let initial;
    let params = match trained {
        Some(p) if !config.ablation.no_trained_retriever => p,
        _ => {
            initial = config.initial_params()?;
            &initial
        }
    };
    let rows = tasks.iter().map(|t| run_task(t, sampler, generator, parser, params, config, diags)).collect();
    Ok(EvalReport::from_rows(config.clone(), rows))
}
