//! On-disk formats: JSONL corpora, tasks and training sets, JSON
//! checkpoints and reports, CSV exports.

use std::fs;
use std::path::Path;

use align_retrieve_core::corpus::{LineSpan, Snippet, SnippetKind};
use align_retrieve_core::dataset::TrainingSample;
use align_retrieve_core::eval::{BenchmarkTask, EvalReport};
use align_retrieve_core::retrieval::{EmbedderParams, HASH_VERSION};
use align_retrieve_core::train::TrainMetrics;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// One JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    parse_jsonl(path, &read_text(path)?)
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path, text: &str) -> AppResult<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AppError::Parse { path: path.into(), line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialise"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> AppResult<()> {
    write_text(path, &to_jsonl(records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub kind: SnippetKind,
    pub origin_path: String,
    pub start_line: Option<usize>,
    pub end_line: Option<usize>,
    pub text: String,
}

impl From<&Snippet> for CorpusRecord {
    fn from(s: &Snippet) -> Self {
        Self {
            id: s.id.clone(),
            kind: s.kind,
            origin_path: s.origin_path.clone(),
            start_line: s.span.map(|sp| sp.start),
            end_line: s.span.map(|sp| sp.end),
            text: s.text.clone(),
        }
    }
}

impl From<CorpusRecord> for Snippet {
    fn from(r: CorpusRecord) -> Self {
        let span = match (r.start_line, r.end_line) {
            (Some(start), Some(end)) => Some(LineSpan { start, end }),
            _ => None,
        };
        Snippet { id: r.id, kind: r.kind, origin_path: r.origin_path, span, line_count: r.text.lines().count(), text: r.text }
    }
}

pub fn write_corpus(path: &Path, snippets: &[Snippet]) -> AppResult<()> {
    let records: Vec<CorpusRecord> = snippets.iter().map(CorpusRecord::from).collect();
    write_jsonl(path, &records)
}

pub fn read_corpus(path: &Path) -> AppResult<Vec<Snippet>> {
    Ok(read_jsonl::<CorpusRecord>(path)?.into_iter().map(Snippet::from).collect())
}

pub fn read_tasks(path: &Path) -> AppResult<Vec<BenchmarkTask>> {
    read_jsonl(path)
}

pub fn read_training_set(path: &Path) -> AppResult<Vec<TrainingSample>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    dim: usize,
    buckets: usize,
    hash_version: String,
    weights: Vec<f64>,
}

pub fn checkpoint_json(params: &EmbedderParams) -> String {
    let ckpt = Checkpoint {
        dim: params.dim(),
        buckets: params.buckets(),
        hash_version: HASH_VERSION.to_string(),
        weights: params.weights().to_vec(),
    };
    let mut text = serde_json::to_string(&ckpt).expect("checkpoint serialises");
    text.push('\n');
    text
}

pub fn parse_checkpoint(path: &Path, text: &str) -> AppResult<EmbedderParams> {
    let ckpt: Checkpoint = serde_json::from_str(text)
        .map_err(|e| AppError::Parse { path: path.into(), line: e.line(), message: e.to_string() })?;
    if ckpt.hash_version != HASH_VERSION {
        return Err(AppError::Config(format!(
            "{}: checkpoint uses feature hashing {}, this build uses {HASH_VERSION}",
            path.display(),
            ckpt.hash_version
        )));
    }
    Ok(EmbedderParams::new(ckpt.dim, ckpt.buckets, ckpt.weights)?)
}

pub fn save_checkpoint(path: &Path, params: &EmbedderParams) -> AppResult<()> {
    write_text(path, &checkpoint_json(params))
}

pub fn load_checkpoint(path: &Path) -> AppResult<EmbedderParams> {
    parse_checkpoint(path, &read_text(path)?)
}

pub fn report_json(report: &EvalReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    text
}

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    AppError::io(path, std::io::Error::other(e))
}

fn write_csv<F>(path: &Path, fill: F) -> AppResult<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    fill(&mut writer).map_err(|e| csv_error(path, e))?;
    let bytes = writer.into_inner().map_err(|e| csv_error(path, e.into_error().into()))?;
    write_text(path, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `task_id,prediction,em,es,em_at_k,error`.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> AppResult<()> {
    write_csv(path, |w| {
        w.write_record(["task_id", "prediction", "em", "es", "em_at_k", "error"])?;
        for row in &report.rows {
            w.write_record([
                row.task_id.clone(),
                row.prediction.clone(),
                row.em.to_string(),
                row.es.to_string(),
                row.em_at_k.map(|v| v.to_string()).unwrap_or_default(),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

/// `epoch,mean_reward,recall_at_1,gradient_norm`.
pub fn write_metrics_csv(path: &Path, metrics: &[TrainMetrics]) -> AppResult<()> {
    write_csv(path, |w| {
        w.write_record(["epoch", "mean_reward", "recall_at_1", "gradient_norm"])?;
        for m in metrics {
            w.write_record([m.epoch.to_string(), m.mean_reward.to_string(), m.recall_at_1.to_string(), m.gradient_norm.to_string()])?;
        }
        Ok(())
    })
}
