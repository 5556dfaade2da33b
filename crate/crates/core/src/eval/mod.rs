//! Completion metrics and the benchmark pipeline with its ablations.

mod metrics;
mod pipeline;

pub use metrics::{edit_similarity, em_at_k, exact_match, levenshtein};
pub use pipeline::{
    complete_task, enhance_query, run_benchmark, run_task, task_seed, AblationFlags, Aggregates, BenchmarkTask, EvalReport,
    PipelineConfig, TaskOutcome, TaskRow,
};
