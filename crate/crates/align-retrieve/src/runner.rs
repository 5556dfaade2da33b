//! Concurrent benchmark evaluation and dataset construction.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use align_retrieve_core::backend::CompletionBackend;
use align_retrieve_core::corpus::CodeParser;
use align_retrieve_core::dataset::{build_training_samples, TrainingSample};
use align_retrieve_core::eval::{run_task, BenchmarkTask, EvalReport, PipelineConfig};
use align_retrieve_core::retrieval::EmbedderParams;
use align_retrieve_core::Diagnostics;

use crate::error::{AppError, AppResult};
use crate::repo::load_repo;

/// Applies `work` to every item on up to `jobs` threads and returns the
/// results in input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, work: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let result = work(item);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(result);
            });
        }
    });
    slots.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().map(|r| r.expect("every item processed")).collect()
}

/// Evaluates tasks concurrently. Rows and diagnostics come out in the same
/// order regardless of `jobs`.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark_parallel(
    tasks: &[BenchmarkTask],
    sampler: &(dyn CompletionBackend + Sync),
    generator: &(dyn CompletionBackend + Sync),
    parser: &(dyn CodeParser + Sync),
    trained: Option<&EmbedderParams>,
    config: &PipelineConfig,
    jobs: usize,
    diags: &mut Diagnostics,
) -> AppResult<EvalReport> {
    config.validate()?;
    let initial;
    let params = match trained {
        Some(p) if !config.ablation.no_trained_retriever => p,
        _ => {
            initial = config.initial_params()?;
            &initial
        }
    };
    let results = parallel_map(tasks, jobs, |task| {
        let mut local = Diagnostics::new();
        let row = run_task(task, sampler, generator, parser, params, config, &mut local);
        (row, local)
    });
    let mut rows = Vec::with_capacity(results.len());
    for (row, local) in results {
        diags.extend(local);
        rows.push(row);
    }
    Ok(EvalReport::from_rows(config.clone(), rows))
}

/// Training samples from every repository directly under `root` (the
/// directory name is the repository id), skipping excluded ids.
pub fn build_dataset(
    root: &Path,
    exclude: &BTreeSet<String>,
    parser: &(dyn CodeParser + Sync),
    master_seed: u64,
    samples_per_cluster: usize,
    jobs: usize,
    diags: &mut Diagnostics,
) -> AppResult<Vec<TrainingSample>> {
    let mut repos = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| AppError::io(root, e))? {
        let entry = entry.map_err(|e| AppError::io(root, e))?;
        if entry.file_type().map_err(|e| AppError::io(entry.path(), e))?.is_dir() {
            let id = entry.file_name().to_string_lossy().into_owned();
            if !id.starts_with('.') {
                repos.push((id, entry.path()));
            }
        }
    }
    repos.sort();
    for (id, _) in repos.iter().filter(|(id, _)| exclude.contains(id)) {
        diags.warn(format!("{id}: excluded"));
    }
    repos.retain(|(id, _)| !exclude.contains(id));
    let results = parallel_map(&repos, jobs, |(id, path)| -> AppResult<(Vec<TrainingSample>, Diagnostics)> {
        let mut local = Diagnostics::new();
        let repo = load_repo(path, &mut local)?;
        let samples = build_training_samples(id, &repo, parser, master_seed, samples_per_cluster, &mut local);
        Ok((samples, local))
    });
    let mut all = Vec::new();
    for result in results {
        let (samples, local) = result?;
        diags.extend(local);
        all.extend(samples);
    }
    all.sort_by(|a, b| (&a.repo_id, a.seed).cmp(&(&b.repo_id, b.seed)));
    Ok(all)
}
