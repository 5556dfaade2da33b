//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use align_retrieve_core::corpus::{base_snippets, build_codebase, CodebaseConfig, Repo, Snippet, SnippetKind};
use align_retrieve_core::eval::{complete_task, Aggregates, BenchmarkTask};
use align_retrieve_core::query::SamplingTheoryParams;
use align_retrieve_core::retrieval::EmbedderParams;
use align_retrieve_core::train::synthetic::planted_samples;
use align_retrieve_core::train::{train, train_on_dataset, PreparedSample, TrainMetrics};
use align_retrieve_core::{Diagnostics, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::AppConfig;
use crate::error::AppError;
use crate::formats::{
    load_checkpoint, read_tasks, read_training_set, report_json, save_checkpoint, write_corpus, write_jsonl,
    write_metrics_csv, write_report_csv, write_text,
};
use crate::parser::TreeSitterParser;
use crate::repo::{load_repo, read_exclusions};
use crate::runner::{build_dataset, run_benchmark_parallel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "align-retrieve", version, about = "Retrieval-augmented repository-level code completion")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for sampling, dataset construction and initialisation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override any configuration key, e.g. `--set retrieval.coarse_k=8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct PipelineArgs {
    /// Embedder checkpoint for fine retrieval.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Number of sampled candidate completions.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_p: Option<f64>,
    #[arg(long)]
    coarse_k: Option<usize>,
    #[arg(long)]
    reward_n: Option<usize>,
    #[arg(long)]
    max_lines: Option<usize>,
    #[arg(long)]
    fine_budget_tokens: Option<usize>,
    #[arg(long)]
    no_dependency_context: bool,
    #[arg(long)]
    no_query_enhancement: bool,
    #[arg(long)]
    no_trained_retriever: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a repository into snippets and write them as JSONL.
    Index {
        #[arg(long)]
        repo: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Treat this repository file as the one being completed: it is left
        /// out of the base snippets and its imports add dependency snippets.
        #[arg(long)]
        completion_file: Option<String>,
        #[arg(long)]
        max_lines: Option<usize>,
    },
    /// Complete the end of FILE using the rest of the repository.
    Complete {
        #[arg(long)]
        repo: Option<PathBuf>,
        file: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Train the dense retriever.
    Train {
        /// Training-set JSONL from `dataset-build`.
        #[arg(long, conflicts_with = "synthetic")]
        dataset: Option<PathBuf>,
        /// Train on this many generated planted-relevance samples instead.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Metrics CSV; defaults next to the checkpoint.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Start from this checkpoint instead of a random initialisation.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        samples_per_epoch: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, value_enum)]
        optimizer: Option<OptimizerArg>,
        #[arg(long)]
        checkpoint_every: Option<usize>,
        #[arg(long)]
        resample_candidates: bool,
    },
    /// Run a benchmark task file and write a report.
    Eval {
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also export rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Evaluate every sampling number in a range such as `1..6`.
        #[arg(long)]
        sweep_k: Option<String>,
        /// Concurrent tasks; defaults to what the backends allow.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Tabulate success probability, error and utility against sample count.
    Theory {
        #[arg(long)]
        p_s: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
    /// Build a training set from a directory of repositories.
    DatasetBuild {
        /// Directory whose subdirectories are repositories.
        #[arg(long)]
        repos: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        samples_per_cluster: usize,
        /// Repository ids to leave out, one per line.
        #[arg(long)]
        exclude: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Config(m) => Failure::Usage(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        AppError::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn warnings(&mut self, diags: &Diagnostics) {
        for w in diags.warnings() {
            let _ = writeln!(self.err, "warning: {w}");
        }
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> CmdResult {
    writeln!(out, "{text}").map_err(|e| Failure::Runtime(e.to_string()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli, &mut io) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(io.err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn push<T: ToString>(overrides: &mut Vec<(String, String)>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        overrides.push((key.to_string(), v.to_string()));
    }
}

impl PipelineArgs {
    fn overrides(&self, o: &mut Vec<(String, String)>) {
        push(o, "paths.checkpoint", self.checkpoint.as_ref().map(|p| p.display().to_string()));
        push(o, "sampling.k", self.k);
        push(o, "sampling.temperature", self.temperature);
        push(o, "sampling.top_p", self.top_p);
        push(o, "retrieval.coarse_k", self.coarse_k);
        push(o, "retrieval.reward_n", self.reward_n);
        push(o, "retrieval.max_lines", self.max_lines);
        push(o, "retrieval.fine_budget_tokens", self.fine_budget_tokens);
        push(o, "ablation.no_dependency_context", self.no_dependency_context.then_some(true));
        push(o, "ablation.no_query_enhancement", self.no_query_enhancement.then_some(true));
        push(o, "ablation.no_trained_retriever", self.no_trained_retriever.then_some(true));
    }
}

fn load_config(cli: &Cli) -> Result<AppConfig, Failure> {
    let mut overrides = Vec::new();
    for item in &cli.set {
        let (k, v) = item.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {item}")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    push(&mut overrides, "sampling.seed", cli.seed);
    match &cli.command {
        Command::Index { repo, max_lines, .. } => {
            push(&mut overrides, "paths.repo", repo.as_ref().map(|p| p.display().to_string()));
            push(&mut overrides, "retrieval.max_lines", *max_lines);
        }
        Command::Complete { repo, pipeline, .. } => {
            push(&mut overrides, "paths.repo", repo.as_ref().map(|p| p.display().to_string()));
            pipeline.overrides(&mut overrides);
        }
        Command::Eval { tasks, pipeline, .. } => {
            push(&mut overrides, "paths.tasks", tasks.as_ref().map(|p| p.display().to_string()));
            pipeline.overrides(&mut overrides);
        }
        Command::Train {
            epochs, samples_per_epoch, learning_rate, optimizer, checkpoint_every, resample_candidates, ..
        } => {
            push(&mut overrides, "train.epochs", *epochs);
            push(&mut overrides, "train.samples_per_epoch", *samples_per_epoch);
            push(&mut overrides, "train.learning_rate", *learning_rate);
            let optimizer = optimizer.map(|o| match o {
                OptimizerArg::Sgd => "\"sgd\"",
                OptimizerArg::Adam => "\"adam\"",
            });
            push(&mut overrides, "train.optimizer", optimizer);
            push(&mut overrides, "train.checkpoint_every", *checkpoint_every);
            push(&mut overrides, "train.resample_candidates", resample_candidates.then_some(true));
        }
        Command::Theory { .. } | Command::DatasetBuild { .. } => {}
    }
    Ok(AppConfig::load(cli.config.as_deref(), &overrides)?)
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> CmdResult {
    if let Command::Theory { p_s, rho, alpha, beta, gamma, n_max } = cli.command {
        return cmd_theory(SamplingTheoryParams { p_s, rho, alpha, beta, gamma }, n_max, io);
    }
    let config = load_config(&cli)?;
    match cli.command {
        Command::Index { out, completion_file, .. } => cmd_index(&config, &out, completion_file.as_deref(), io),
        Command::Complete { file, .. } => cmd_complete(&config, &file, io),
        Command::Train { dataset, synthetic, out, metrics, init, .. } => {
            cmd_train(&config, dataset.as_deref(), synthetic, &out, metrics.as_deref(), init.as_deref(), io)
        }
        Command::Eval { out, csv, sweep_k, jobs, .. } => cmd_eval(&config, &out, csv.as_deref(), sweep_k.as_deref(), jobs, io),
        Command::DatasetBuild { repos, out, samples_per_cluster, exclude } => {
            cmd_dataset_build(&config, &repos, &out, samples_per_cluster, exclude.as_deref(), io)
        }
        Command::Theory { .. } => unreachable!("handled above"),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| Failure::Usage(format!("no {what} given (flag or config paths)")))
}

fn cmd_index(config: &AppConfig, out: &Path, completion_file: Option<&str>, io: &mut Io<'_>) -> CmdResult {
    let root = required(&config.paths.repo, "repository")?;
    let mut diags = Diagnostics::new();
    let repo = load_repo(root, &mut diags)?;
    let snippets: Vec<Snippet> = match completion_file {
        Some(path) => {
            let codebase = CodebaseConfig { max_lines: config.retrieval.max_lines, include_dependencies: true };
            build_codebase(&repo, path, None, &codebase, &TreeSitterParser, &mut diags)?
        }
        None => {
            let mut all = Vec::new();
            for file in repo.files() {
                all.extend(base_snippets(file, config.retrieval.max_lines)?);
            }
            all
        }
    };
    write_corpus(out, &snippets)?;
    io.warnings(&diags);
    let dependency = snippets.iter().filter(|s| s.kind == SnippetKind::Dependency).count();
    say(io.out, format_args!("base snippets: {}", snippets.len() - dependency))?;
    say(io.out, format_args!("dependency snippets: {dependency}"))
}

fn retriever_params(config: &AppConfig) -> Result<Option<EmbedderParams>, Failure> {
    match &config.paths.checkpoint {
        Some(path) if !config.ablation.no_trained_retriever => Ok(Some(load_checkpoint(path)?)),
        _ => Ok(None),
    }
}

/// Repository-relative path of `file`, which must lie inside `root`.
fn relative_to(root: &Path, file: &Path) -> Result<String, Failure> {
    let inside = root.join(file);
    let candidate = if file.is_relative() && inside.is_file() { inside } else { file.to_path_buf() };
    let canon_root = root.canonicalize().map_err(|e| Failure::Runtime(format!("{}: {e}", root.display())))?;
    let canon_file = candidate.canonicalize().map_err(|e| Failure::Runtime(format!("{}: {e}", file.display())))?;
    let rel = canon_file
        .strip_prefix(&canon_root)
        .map_err(|_| Failure::Usage(format!("{} is not inside {}", file.display(), root.display())))?;
    Ok(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
}

fn cmd_complete(config: &AppConfig, file: &Path, io: &mut Io<'_>) -> CmdResult {
    let root = required(&config.paths.repo, "repository")?;
    let rel = relative_to(root, file)?;
    let mut diags = Diagnostics::new();
    let repo: Repo = load_repo(root, &mut diags)?;
    let unfinished = repo
        .get(&rel)
        .map(|f| f.content.clone())
        .ok_or_else(|| Failure::Usage(format!("{rel} is not a Python or Java source")))?;
    let task = BenchmarkTask {
        task_id: rel.clone(),
        files: repo.files().to_vec(),
        completion_file: rel,
        unfinished_code: unfinished,
        groundtruth: String::new(),
    };
    let pipeline = config.pipeline();
    let params = match retriever_params(config)? {
        Some(p) => p,
        None => pipeline.initial_params()?,
    };
    let sampler = config.backend.sampler.build();
    let generator = config.backend.generator.build();
    let outcome = complete_task(&task, &*sampler, &*generator, &TreeSitterParser, &params, &pipeline, &mut diags);
    io.warnings(&diags);
    say(io.out, format_args!("{}", outcome?.prediction))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_train(
    config: &AppConfig,
    dataset: Option<&Path>,
    synthetic: Option<usize>,
    out: &Path,
    metrics_path: Option<&Path>,
    init: Option<&Path>,
    io: &mut Io<'_>,
) -> CmdResult {
    let train_config = config.train_config();
    let pipeline = config.pipeline();
    let init = match init {
        Some(path) => load_checkpoint(path)?,
        None => pipeline.initial_params()?,
    };
    let evaluator = config.backend.evaluator.build();
    let mut diags = Diagnostics::new();
    let mut rows: Vec<TrainMetrics> = Vec::new();
    let every = train_config.checkpoint_every;
    let mut on_epoch = |m: &TrainMetrics, params: &EmbedderParams| -> align_retrieve_core::Result<()> {
        rows.push(m.clone());
        if every > 0 && m.epoch > 0 && m.epoch.is_multiple_of(every) {
            save_checkpoint(&with_suffix(out, &format!(".epoch{}.json", m.epoch)), params)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    };
    let outcome = match (dataset, synthetic) {
        (_, Some(count)) => {
            let samples: Vec<PreparedSample> = planted_samples(count, train_config.snippets_per_sample, train_config.seed)
                .into_iter()
                .map(|s| PreparedSample::evaluate(&*evaluator, s, init.buckets()))
                .collect::<Result<_, _>>()?;
            train(&train_config, &samples, init, &mut on_epoch)?
        }
        (Some(path), None) => {
            let data = read_training_set(path)?;
            let sampler = config.backend.sampler.build();
            let result = train_on_dataset(
                &train_config,
                &data,
                &*sampler,
                &*evaluator,
                &TreeSitterParser,
                &pipeline,
                init,
                &mut diags,
                &mut on_epoch,
            );
            io.warnings(&diags);
            result?
        }
        (None, None) => return Err(Failure::Usage("train needs --dataset or --synthetic".into())),
    };
    save_checkpoint(out, &outcome.params)?;
    let metrics_path = metrics_path.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(out, ".metrics.csv"));
    write_metrics_csv(&metrics_path, &rows)?;
    for m in &rows {
        say(
            io.out,
            format_args!(
                "epoch {}: mean_reward={:.6} recall_at_1={:.4} gradient_norm={:.6}",
                m.epoch, m.mean_reward, m.recall_at_1, m.gradient_norm
            ),
        )?;
    }
    Ok(())
}

fn parse_range(range: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("--sweep-k expects a range like 1..6, got {range}"));
    let (lo, hi) = match range.split_once("..").or_else(|| range.split_once('-')) {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().trim_start_matches('=').parse().map_err(|_| bad())?),
        None => {
            let k: usize = range.trim().parse().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

#[derive(Serialize)]
struct SweepPoint {
    k: usize,
    aggregates: Aggregates,
}

#[derive(Serialize)]
struct SweepReport {
    config: align_retrieve_core::eval::PipelineConfig,
    sweep: Vec<SweepPoint>,
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

fn cmd_eval(config: &AppConfig, out: &Path, csv: Option<&Path>, sweep_k: Option<&str>, jobs: Option<usize>, io: &mut Io<'_>) -> CmdResult {
    let tasks_path = required(&config.paths.tasks, "task file")?;
    let tasks = read_tasks(tasks_path)?;
    let params = retriever_params(config)?;
    let sampler = config.backend.sampler.build();
    let generator = config.backend.generator.build();
    let jobs = jobs.unwrap_or_else(|| config.backend.sampler.concurrency().min(config.backend.generator.concurrency()));
    let mut diags = Diagnostics::new();
    let mut pipeline = config.pipeline();

    if let Some(range) = sweep_k {
        let mut points = Vec::new();
        for k in parse_range(range)? {
            pipeline.sampling_k = k;
            let report =
                run_benchmark_parallel(&tasks, &*sampler, &*generator, &TreeSitterParser, params.as_ref(), &pipeline, jobs, &mut diags)?;
            say(io.out, format_args!("k={k} EM={} ES={} EM@k={}", fmt_pct(report.aggregates.em), fmt_pct(report.aggregates.es), fmt_pct(report.aggregates.em_at_k)))?;
            points.push(SweepPoint { k, aggregates: report.aggregates });
        }
        io.warnings(&diags);
        let mut text = serde_json::to_string_pretty(&SweepReport { config: config.pipeline(), sweep: points }).expect("serialises");
        text.push('\n');
        return Ok(write_text(out, &text)?);
    }

    let report = run_benchmark_parallel(&tasks, &*sampler, &*generator, &TreeSitterParser, params.as_ref(), &pipeline, jobs, &mut diags)?;
    io.warnings(&diags);
    write_text(out, &report_json(&report))?;
    if let Some(csv) = csv {
        write_report_csv(csv, &report)?;
    }
    let a = &report.aggregates;
    say(io.out, format_args!("tasks={} EM={} ES={} EM@k={}", a.tasks, fmt_pct(a.em), fmt_pct(a.es), fmt_pct(a.em_at_k)))
}

fn cmd_theory(params: SamplingTheoryParams, n_max: usize, io: &mut Io<'_>) -> CmdResult {
    params.validate().map_err(|e| Failure::Runtime(e.to_string()))?;
    say(io.out, format_args!("n\tp_at_least_one\tcumulative_error\tutility"))?;
    for n in 1..=n_max {
        let n = n as f64;
        let row = (|| -> align_retrieve_core::Result<String> {
            Ok(format!(
                "{n}\t{:.6}\t{:.6}\t{:.6}",
                params.p_at_least_one(n)?,
                params.cumulative_error(n)?,
                params.utility(n)?
            ))
        })();
        match row {
            Ok(line) => say(io.out, format_args!("{line}"))?,
            Err(e) => say(io.out, format_args!("{n}\terror: {e}"))?,
        }
    }
    match params.optimal_n() {
        Ok(n_star) => say(io.out, format_args!("n*\t{n_star:.3}")),
        Err(e) => say(io.out, format_args!("n*\tnone ({e})")),
    }
}

fn cmd_dataset_build(
    config: &AppConfig,
    repos: &Path,
    out: &Path,
    samples_per_cluster: usize,
    exclude: Option<&Path>,
    io: &mut Io<'_>,
) -> CmdResult {
    let excluded = match exclude {
        Some(path) => read_exclusions(path)?,
        None => Default::default(),
    };
    let mut diags = Diagnostics::new();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let samples = build_dataset(repos, &excluded, &TreeSitterParser, config.sampling.seed, samples_per_cluster, jobs, &mut diags)?;
    io.warnings(&diags);
    write_jsonl(out, &samples)?;
    let repo_count = samples.iter().map(|s| &s.repo_id).collect::<std::collections::BTreeSet<_>>().len();
    say(io.out, format_args!("samples: {} from {repo_count} repositories", samples.len()))
}
