//! Retriever alignment: gradient ascent on the perplexity-derived reward.

mod grad;
mod optim;
pub mod synthetic;

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use grad::{l2_norm, score_gradient_wrt_params, Projected};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, CLIP_NORM};

use crate::backend::CompletionBackend;
use crate::corpus::{CodeParser, Repo, SourceFile};
use crate::dataset::TrainingSample;
use crate::eval::{enhance_query, PipelineConfig};
use crate::retrieval::{hash_text, EmbedderParams, SparseVec};
use crate::reward::{reward, reward_gradient_wrt_scores, select_mp, snippet_ppls, RewardSample};
use crate::seed::{stream_seed, substream_rng, SAMPLER, SHUFFLE};
use crate::{Diagnostics, Error, Language, Result};

pub const DEFAULT_EPOCHS: usize = 20;
pub const DEFAULT_SAMPLES_PER_EPOCH: usize = 200;
pub const DEFAULT_LEARNING_RATE: f64 = 5e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub learning_rate: f64,
    /// Candidate snippets per reward sample.
    pub snippets_per_sample: usize,
    /// Sampled candidate completions per enhanced query.
    pub sampling_k: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Save a checkpoint every this many epochs; 0 keeps only the final one.
    pub checkpoint_every: usize,
    /// Re-sample candidates (and so the reward pool) at every epoch instead
    /// of once up front.
    pub resample_candidates: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            samples_per_epoch: DEFAULT_SAMPLES_PER_EPOCH,
            learning_rate: DEFAULT_LEARNING_RATE,
            snippets_per_sample: crate::reward::DEFAULT_REWARD_N,
            sampling_k: crate::query::DEFAULT_SAMPLING_K,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            checkpoint_every: 0,
            resample_candidates: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_epoch == 0 || self.snippets_per_sample == 0 || self.sampling_k == 0 {
            return Err(Error::InvalidConfig("samples_per_epoch, snippets_per_sample and sampling_k must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidConfig(format!("learning rate must be finite and >= 0, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epoch: usize,
    pub mean_reward: f64,
    /// Fraction of samples whose minimal-perplexity snippet the retriever ranks first.
    pub recall_at_1: f64,
    /// Mean pre-clipping gradient norm.
    pub gradient_norm: f64,
}

/// A reward sample with its perplexities resolved and features cached.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub sample: RewardSample,
    pub ppls: Vec<f64>,
    pub mp_index: usize,
    snippet_features: Vec<SparseVec>,
    query_features: SparseVec,
}

impl PreparedSample {
    pub fn new(sample: RewardSample, ppls: Vec<f64>, buckets: usize) -> Result<Self> {
        if ppls.len() != sample.snippets.len() {
            return Err(Error::InvalidInput(format!("{} perplexities for {} snippets", ppls.len(), sample.snippets.len())));
        }
        let mp_index = select_mp(&ppls)?;
        let snippet_features = sample.snippets.iter().map(|s| hash_text(&s.text, buckets)).collect();
        let query_features = hash_text(&sample.query.rendered, buckets);
        Ok(Self { sample, ppls, mp_index, snippet_features, query_features })
    }

    /// Scores the sample's snippets with `backend` to find its target.
    pub fn evaluate(backend: &dyn CompletionBackend, sample: RewardSample, buckets: usize) -> Result<Self> {
        let ppls = snippet_ppls(backend, &sample)?;
        Self::new(sample, ppls, buckets)
    }

    pub fn scores(&self, params: &EmbedderParams) -> Vec<f64> {
        let q = Projected::new(params, &self.query_features);
        self.snippet_features.iter().map(|f| Projected::new(params, f).cosine(&q)).collect()
    }

    /// Whether the top-scored snippet (ties by snippet id) is the target one.
    pub fn retrieves_target(&self, scores: &[f64]) -> bool {
        let snippets = &self.sample.snippets;
        let best = (0..scores.len()).min_by(|&a, &b| {
            scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then_with(|| snippets[a].id.cmp(&snippets[b].id))
        });
        best == Some(self.mp_index)
    }

    /// Reward and its gradient over the weights at `params`.
    pub fn reward_and_gradient(&self, params: &EmbedderParams) -> Result<(f64, Vec<f64>)> {
        let scores = self.scores(params);
        let g = reward_gradient_wrt_scores(&scores, self.mp_index)?;
        let grad = score_gradient_wrt_params(params, &self.snippet_features, &self.query_features, &g);
        Ok((reward(&scores, self.mp_index)?, grad))
    }
}

/// Mean reward, recall@1 and mean gradient norm at `params`.
pub fn evaluate_recall(params: &EmbedderParams, samples: &[PreparedSample], epoch: usize) -> Result<TrainMetrics> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let (mut total_reward, mut hits, mut total_norm) = (0.0, 0usize, 0.0);
    for sample in samples {
        let scores = sample.scores(params);
        total_reward += reward(&scores, sample.mp_index)?;
        hits += usize::from(sample.retrieves_target(&scores));
        let g = reward_gradient_wrt_scores(&scores, sample.mp_index)?;
        total_norm += l2_norm(&score_gradient_wrt_params(params, &sample.snippet_features, &sample.query_features, &g));
    }
    let n = samples.len() as f64;
    Ok(TrainMetrics { epoch, mean_reward: total_reward / n, recall_at_1: hits as f64 / n, gradient_norm: total_norm / n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// Before clipping.
    pub gradient_norm: f64,
    pub applied: bool,
}

/// One ascent step on a single sample.
pub fn train_step(
    params: &mut EmbedderParams,
    sample: &PreparedSample,
    state: &mut OptimizerState,
    learning_rate: f64,
) -> Result<StepOutcome> {
    let (reward, mut grad) = sample.reward_and_gradient(params)?;
    let gradient_norm = l2_norm(&grad);
    let applied = state.ascend(params, &mut grad, learning_rate);
    Ok(StepOutcome { reward, gradient_norm, applied })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: EmbedderParams,
    /// Row 0 is the initialisation; row `e` is measured after epoch `e`.
    pub metrics: Vec<TrainMetrics>,
}

/// Trains on fixed prepared samples. `on_epoch` sees every metrics row
/// (including epoch 0) with the parameters at that point.
pub fn train(
    config: &TrainConfig,
    samples: &[PreparedSample],
    init: EmbedderParams,
    mut on_epoch: impl FnMut(&TrainMetrics, &EmbedderParams) -> Result<()>,
) -> Result<TrainOutcome> {
    train_with(config, init, Cow::Borrowed(samples), None, &mut on_epoch)
}

/// `refresh(round)` replaces the samples before every epoch after the first.
fn train_with(
    config: &TrainConfig,
    init: EmbedderParams,
    first: Cow<'_, [PreparedSample]>,
    mut refresh: Option<&mut dyn FnMut(u64) -> Result<Vec<PreparedSample>>>,
    on_epoch: &mut dyn FnMut(&TrainMetrics, &EmbedderParams) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut samples = first;
    let mut params = init;
    let mut state = OptimizerState::new(config.optimizer, params.weights().len());
    let initial = evaluate_recall(&params, &samples, 0)?;
    on_epoch(&initial, &params)?;
    let mut metrics = alloc::vec![initial];
    for epoch in 1..=config.epochs {
        if epoch > 1 {
            if let Some(refresh) = refresh.as_mut() {
                samples = Cow::Owned(refresh(epoch as u64 - 1)?);
            }
        }
        if samples.is_empty() {
            return Err(Error::InvalidConfig("no training samples".into()));
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = substream_rng(config.seed, SHUFFLE, epoch as u64);
        let mut norm_total = 0.0;
        for i in 0..config.samples_per_epoch {
            if i % samples.len() == 0 {
                order.shuffle(&mut rng);
            }
            let step = train_step(&mut params, &samples[order[i % samples.len()]], &mut state, config.learning_rate)?;
            norm_total += step.gradient_norm;
        }
        let mut row = evaluate_recall(&params, &samples, epoch)?;
        row.gradient_norm = norm_total / config.samples_per_epoch as f64;
        on_epoch(&row, &params)?;
        metrics.push(row);
    }
    Ok(TrainOutcome { params, metrics })
}

/// Builds the reward sample for one training sample: candidates are sampled
/// against the coarse context, and the reward pool is the BM25 top-n over the
/// enhanced query.
pub fn reward_sample_for(
    sample: &TrainingSample,
    backend: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    pipeline: &PipelineConfig,
    seed: u64,
    diags: &mut Diagnostics,
) -> Result<RewardSample> {
    let language = Language::from_path(&sample.completion_file)
        .ok_or_else(|| Error::InvalidInput(format!("unsupported file type: {}", sample.completion_file)))?;
    let mut files: Vec<SourceFile> = sample.cross_files.clone();
    files.push(SourceFile::new(sample.completion_file.clone(), sample.unfinished_code.clone()));
    let repo = Repo::new(files);
    let (index, query) =
        enhance_query(&repo, &sample.completion_file, &sample.unfinished_code, language, backend, parser, pipeline, seed, diags)?;
    let pool = index.bm25_retrieve(&query.rendered, pipeline.reward_n)?;
    if pool.is_empty() {
        return Err(Error::InvalidInput(format!("no snippet matches the query for {}", sample.completion_file)));
    }
    Ok(RewardSample {
        query,
        snippets: pool.iter().map(|r| index.snippet(r.index).clone()).collect(),
        target: sample.target.clone(),
        language,
    })
}

/// Prepares every training sample, skipping (with a warning) those whose
/// candidates or perplexities cannot be obtained.
#[allow(clippy::too_many_arguments)]
pub fn prepare_samples(
    dataset: &[TrainingSample],
    sampler: &dyn CompletionBackend,
    evaluator: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    pipeline: &PipelineConfig,
    buckets: usize,
    round: u64,
    diags: &mut Diagnostics,
) -> Vec<PreparedSample> {
    let mut out = Vec::new();
    for sample in dataset {
        let seed = stream_seed(stream_seed(sample.seed ^ round, SAMPLER), &sample.repo_id);
        let prepared = reward_sample_for(sample, sampler, parser, pipeline, seed, diags)
            .and_then(|rs| PreparedSample::evaluate(evaluator, rs, buckets));
        match prepared {
            Ok(p) => out.push(p),
            Err(err) => diags.warn(format!("skipping {}:{}: {err}", sample.repo_id, sample.completion_file)),
        }
    }
    out
}

/// Full training from a dataset: prepares reward samples (once, or per
/// epoch when resampling) and trains from `init`.
#[allow(clippy::too_many_arguments)]
pub fn train_on_dataset(
    config: &TrainConfig,
    dataset: &[TrainingSample],
    sampler: &dyn CompletionBackend,
    evaluator: &dyn CompletionBackend,
    parser: &dyn CodeParser,
    pipeline: &PipelineConfig,
    init: EmbedderParams,
    diags: &mut Diagnostics,
    mut on_epoch: impl FnMut(&TrainMetrics, &EmbedderParams) -> Result<()>,
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("training dataset is empty".into()));
    }
    config.validate()?;
    let mut pipeline = pipeline.clone();
    pipeline.sampling_k = config.sampling_k;
    pipeline.reward_n = config.snippets_per_sample;
    let buckets = init.buckets();
    let first = prepare_samples(dataset, sampler, evaluator, parser, &pipeline, buckets, 0, diags);
    if first.is_empty() {
        return Err(Error::InvalidConfig("no usable training samples".into()));
    }
    if !config.resample_candidates {
        return train(config, &first, init, on_epoch);
    }
    let mut local = Diagnostics::new();
    let mut refresh = |round: u64| Ok(prepare_samples(dataset, sampler, evaluator, parser, &pipeline, buckets, round, &mut local));
    let outcome = train_with(config, init, Cow::Owned(first), Some(&mut refresh), &mut on_epoch);
    diags.extend(local);
    outcome
}
