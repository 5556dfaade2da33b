//! Application configuration: built-in defaults, overlaid by a TOML file,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use align_retrieve_core::backend::{CompletionBackend, MockBackend, DEFAULT_MAX_NEW_TOKENS, DEFAULT_TEMPERATURE, DEFAULT_TOP_P};
use align_retrieve_core::corpus::DEFAULT_MAX_LINES;
use align_retrieve_core::eval::{AblationFlags, PipelineConfig};
use align_retrieve_core::query::{DEFAULT_SAMPLING_K, DEFAULT_TAIL_LINES};
use align_retrieve_core::retrieval::embed::{DEFAULT_BUCKETS, DEFAULT_DIM};
use align_retrieve_core::retrieval::DEFAULT_COARSE_K;
use align_retrieve_core::reward::DEFAULT_REWARD_N;
use align_retrieve_core::train::{OptimizerKind, TrainConfig, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE, DEFAULT_SAMPLES_PER_EPOCH};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::read_text;
use crate::http::{HttpBackend, HttpSettings, DEFAULT_API_KEY_ENV};

pub type SharedBackend = Arc<dyn CompletionBackend + Send + Sync>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub repo: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_concurrent: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            base_url: None,
            model: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 60.0,
            max_retries: 3,
            max_concurrent: 4,
        }
    }
}

impl BackendConfig {
    fn validate(&self, role: &str) -> AppResult<()> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(AppError::Config(format!("backend.{role}.timeout_secs must be positive")));
        }
        if self.max_retries == 0 || self.max_concurrent == 0 {
            return Err(AppError::Config(format!("backend.{role}: max_retries and max_concurrent must be positive")));
        }
        if self.kind == BackendKind::Http && (self.base_url.is_none() || self.model.is_none()) {
            return Err(AppError::Config(format!("backend.{role}: http backends need base_url and model")));
        }
        Ok(())
    }

    pub fn build(&self) -> SharedBackend {
        match self.kind {
            BackendKind::Mock => Arc::new(MockBackend),
            BackendKind::Http => Arc::new(HttpBackend::new(HttpSettings {
                base_url: self.base_url.clone().unwrap_or_default(),
                model: self.model.clone().unwrap_or_default(),
                timeout: Duration::from_secs_f64(self.timeout_secs),
                max_retries: self.max_retries,
                max_concurrent: self.max_concurrent,
                backoff: Duration::from_millis(250),
                api_key: std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty()),
            })),
        }
    }

    /// Parallelism the backend tolerates.
    pub fn concurrency(&self) -> usize {
        match self.kind {
            BackendKind::Mock => std::thread::available_parallelism().map_or(1, |n| n.get()),
            BackendKind::Http => self.max_concurrent,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub sampler: BackendConfig,
    pub evaluator: BackendConfig,
    pub generator: BackendConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub k: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
    pub max_new_tokens: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_SAMPLING_K,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            seed: 0,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub max_lines: usize,
    pub coarse_k: usize,
    pub fine_budget_tokens: usize,
    pub reward_n: usize,
    pub tail_lines: usize,
    pub embed_dim: usize,
    pub embed_buckets: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        Self {
            max_lines: DEFAULT_MAX_LINES,
            coarse_k: DEFAULT_COARSE_K,
            fine_budget_tokens: pipeline.fine_budget_tokens,
            reward_n: DEFAULT_REWARD_N,
            tail_lines: DEFAULT_TAIL_LINES,
            embed_dim: DEFAULT_DIM,
            embed_buckets: DEFAULT_BUCKETS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub checkpoint_every: usize,
    pub resample_candidates: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            samples_per_epoch: DEFAULT_SAMPLES_PER_EPOCH,
            learning_rate: DEFAULT_LEARNING_RATE,
            optimizer: OptimizerKind::Adam,
            checkpoint_every: 0,
            resample_candidates: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub paths: PathsConfig,
    pub backend: BackendsConfig,
    pub sampling: SamplingConfig,
    pub retrieval: RetrievalConfig,
    pub ablation: AblationFlags,
    pub train: TrainSection,
}

/// Keys whose values are always taken literally.
const STRING_KEYS: &[&str] = &["base_url", "model", "api_key_env"];

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl AppConfig {
    /// Defaults overlaid by `file` (when given) and then by `overrides`,
    /// each a dotted key and a raw TOML value such as `("sampling.k", "6")`.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> AppResult<Self> {
        let base = match file {
            Some(path) => {
                let text = read_text(path)?;
                toml::from_str::<AppConfig>(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?
            }
            None => AppConfig::default(),
        };
        let config = if overrides.is_empty() { base } else { base.with_overrides(overrides)? };
        config.validate()?;
        Ok(config)
    }

    fn with_overrides(&self, overrides: &[(String, String)]) -> AppResult<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| AppError::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let mut parts: Vec<&str> = key.split('.').collect();
            let leaf = parts.pop().filter(|l| !l.is_empty()).ok_or_else(|| AppError::Config(format!("empty key in {key}")))?;
            let mut table = root.as_table_mut().expect("config serialises to a table");
            for part in parts {
                table = table
                    .entry(part)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| AppError::Config(format!("{key}: {part} is not a section")))?;
            }
            let textual = key.starts_with("paths.") || STRING_KEYS.contains(&leaf);
            let value = if textual { toml::Value::String(raw.to_string()) } else { parse_value(raw) };
            table.insert(leaf.to_string(), value);
        }
        root.try_into().map_err(|e: toml::de::Error| AppError::Config(e.message().to_string()))
    }

    pub fn validate(&self) -> AppResult<()> {
        if !(1..=8).contains(&self.sampling.k) {
            return Err(AppError::Config(format!("sampling.k must be in 1..=8, got {}", self.sampling.k)));
        }
        for (role, b) in [("sampler", &self.backend.sampler), ("evaluator", &self.backend.evaluator), ("generator", &self.backend.generator)] {
            b.validate(role)?;
        }
        self.pipeline().validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            max_lines: self.retrieval.max_lines,
            coarse_k: self.retrieval.coarse_k,
            sampling_k: self.sampling.k,
            temperature: self.sampling.temperature,
            top_p: self.sampling.top_p,
            max_new_tokens: self.sampling.max_new_tokens,
            seed: self.sampling.seed,
            tail_lines: self.retrieval.tail_lines,
            reward_n: self.retrieval.reward_n,
            fine_budget_tokens: self.retrieval.fine_budget_tokens,
            embed_dim: self.retrieval.embed_dim,
            embed_buckets: self.retrieval.embed_buckets,
            ablation: self.ablation,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            samples_per_epoch: self.train.samples_per_epoch,
            learning_rate: self.train.learning_rate,
            snippets_per_sample: self.retrieval.reward_n,
            sampling_k: self.sampling.k,
            seed: self.sampling.seed,
            optimizer: self.train.optimizer,
            checkpoint_every: self.train.checkpoint_every,
            resample_candidates: self.train.resample_candidates,
        }
    }
}
