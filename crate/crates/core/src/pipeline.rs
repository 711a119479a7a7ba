//! End-to-end machine reading of one target paper.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat};
use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clustering::{cluster_auto, ClusterAssignment, KSearch, KernelKind, KernelMatrix};
use crate::corpus::{CorpusStore, PaperRecord};
use crate::embedding::{
    fetch_dense_embeddings, fuse_embeddings, reduce_dense, spectral_propagate, EmbeddingError, EmbeddingMatrix,
    TfidfModel,
};
use crate::graph::{CandidateSet, CitationGraph, Direction, GraphError};
use crate::provider::ProviderEndpoint;
use crate::relevance::{rank_within_clusters, score_relevance, RelevanceError};
use crate::survey::{
    align_subject_tense, build_survey_card, extract_summary_sentence, extract_topic_label, generate_general_sentence,
    PaperSummary, SurveyError, MAX_CARD_PAPERS,
};
use crate::tree::{build_tree, ResultDocument, Topic};

/// Label of the single topic used when a branch has fewer than three papers.
pub const DEGRADED_LABEL: &str = "All papers";
const EMBED_BATCH: usize = 32;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown target paper {0:?}")]
    UnknownTarget(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    pub url: Option<String>,
    pub timeout_ms: u64,
    pub expected_dim: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            url: None,
            timeout_ms: ProviderEndpoint::DEFAULT_TIMEOUT.as_millis() as u64,
            expected_dim: ProviderEndpoint::DEFAULT_DIM,
        }
    }
}

impl ProviderConfig {
    pub fn endpoint(&self) -> ProviderEndpoint {
        ProviderEndpoint {
            base_url: self.url.clone(),
            timeout: Duration::from_millis(self.timeout_ms),
            expected_dim: self.expected_dim,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Providers {
    pub embedding: ProviderConfig,
    pub summarizer: ProviderConfig,
    pub classifier: ProviderConfig,
}

/// Every knob of the pipeline. Missing keys take their defaults; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Expansion stops once more than this many papers are reached.
    pub threshold: usize,
    pub max_hops: u32,
    /// Candidates kept per direction after PageRank.
    pub candidate_limit: usize,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub embedding_dim: usize,
    pub steps: usize,
    pub mix: f64,
    pub kernel: KernelKind,
    pub k_min: usize,
    pub k_max: usize,
    pub lambda: f64,
    pub topic_size: usize,
    pub seed: u64,
    pub providers: Providers,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold: 100,
            max_hops: 5,
            candidate_limit: 100,
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
            embedding_dim: 128,
            steps: 3,
            mix: 0.5,
            kernel: KernelKind::Linear,
            k_min: 3,
            k_max: 6,
            lambda: 0.5,
            topic_size: 5,
            seed: 42,
            providers: Providers::default(),
        }
    }
}

pub const ENV_EMBED_URL: &str = "IDEAREADER_EMBED_URL";
pub const ENV_SUMMARIZE_URL: &str = "IDEAREADER_SUMMARIZE_URL";
pub const ENV_CLASSIFY_URL: &str = "IDEAREADER_CLASSIFY_URL";

impl PipelineConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, PipelineError> {
        let config: Self = serde_json::from_slice(bytes).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies a partial JSON object on top of `self`. Nested objects merge
    /// key by key; unknown keys are rejected.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, PipelineError> {
        if !overrides.is_object() && !overrides.is_null() {
            return Err(PipelineError::Config("overrides must be a JSON object".into()));
        }
        let mut base = serde_json::to_value(self).map_err(|e| PipelineError::Internal(e.to_string()))?;
        merge(&mut base, overrides);
        let config: Self = serde_json::from_value(base).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Fills provider URLs from the process environment.
    pub fn apply_env(&mut self) {
        self.apply_env_from(|key| std::env::var(key).ok());
    }

    pub fn apply_env_from(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        let slots = [
            (ENV_EMBED_URL, &mut self.providers.embedding),
            (ENV_SUMMARIZE_URL, &mut self.providers.summarizer),
            (ENV_CLASSIFY_URL, &mut self.providers.classifier),
        ];
        for (key, slot) in slots {
            if let Some(url) = lookup(key).filter(|u| !u.trim().is_empty()) {
                slot.url = Some(url.trim().to_string());
            }
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |msg: &str| Err(PipelineError::Config(msg.to_string()));
        if self.threshold == 0 {
            return fail("threshold must be at least 1");
        }
        if self.max_hops == 0 {
            return fail("max_hops must be at least 1");
        }
        if self.candidate_limit == 0 {
            return fail("candidate_limit must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return fail("damping must lie in (0, 1)");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return fail("tol must be positive");
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1");
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return fail("mix must lie in [0, 1]");
        }
        if let KernelKind::Gaussian { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return fail("gaussian gamma must be positive");
            }
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return fail("k range must satisfy 1 <= k_min <= k_max");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be non-negative");
        }
        if !(1..=MAX_CARD_PAPERS).contains(&self.topic_size) {
            return fail("topic_size must lie in [1, 5]");
        }
        for p in [&self.providers.embedding, &self.providers.summarizer, &self.providers.classifier] {
            if p.timeout_ms == 0 || p.expected_dim == 0 {
                return fail("provider timeout_ms and expected_dim must be positive");
            }
        }
        Ok(())
    }

    /// Canonical JSON: fixed key order, compact.
    pub fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    /// Lowercase hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json()))
    }
}

fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (_, serde_json::Value::Null) => {}
        (b, p) => *b = p.clone(),
    }
}

/// `SOURCE_DATE_EPOCH` as an ISO-8601 UTC timestamp, or the Unix epoch when
/// unset or unparsable.
pub fn reproducible_timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .unwrap_or(0);
    format_timestamp(secs)
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

/// The result document, its canonical bytes and run diagnostics.
#[derive(Debug, Clone)]
pub struct MachineReadingResult {
    pub document: ResultDocument,
    pub bytes: Vec<u8>,
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub candidates: BTreeMap<Direction, usize>,
    /// Cluster assignment per non-empty direction.
    pub assignments: BTreeMap<Direction, ClusterAssignment<f64>>,
}

impl MachineReadingResult {
    pub fn config_digest(&self) -> &str {
        &self.document.config_digest
    }
}

struct Clock {
    last: Instant,
    timings: Vec<StageTiming>,
}

impl Clock {
    fn new() -> Self {
        Self {
            last: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage,
            millis: (now - self.last).as_secs_f64() * 1e3,
        });
        self.last = now;
    }
}

fn warn_into(warnings: &mut Vec<String>, message: String) {
    warn!("{message}");
    warnings.push(message);
}

/// Runs the pipeline with `generated_at` from [`reproducible_timestamp`].
pub fn run_pipeline(
    store: &CorpusStore,
    graph: &CitationGraph,
    target_id: &str,
    config: &PipelineConfig,
) -> Result<MachineReadingResult, PipelineError> {
    run_pipeline_at(store, graph, target_id, config, &reproducible_timestamp())
}

pub fn run_pipeline_at(
    store: &CorpusStore,
    graph: &CitationGraph,
    target_id: &str,
    config: &PipelineConfig,
    generated_at: &str,
) -> Result<MachineReadingResult, PipelineError> {
    config.validate()?;
    let target = store
        .get(target_id)
        .filter(|_| graph.contains(target_id))
        .ok_or_else(|| PipelineError::UnknownTarget(target_id.to_string()))?;
    let mut clock = Clock::new();
    let mut warnings = Vec::new();

    let mut candidates = Vec::new();
    for direction in [Direction::References, Direction::Citations] {
        candidates.push(select_candidates(graph, target_id, direction, config)?);
    }
    clock.lap("candidates");

    let batch_ids = shared_batch(target_id, &candidates);
    let embedding = if batch_ids.len() > 1 {
        Some(embed_batch(store, graph, &batch_ids, config, &mut warnings, &mut clock)?)
    } else {
        None
    };

    let label_docs: Vec<String> = batch_ids
        .iter()
        .filter_map(|id| store.get(id))
        .map(|p| format!("{} {}", p.title, p.abstract_text))
        .collect();
    let label_model = TfidfModel::<f64>::fit(&label_docs).ok();

    let mut branches: Vec<Vec<Topic>> = Vec::new();
    let mut assignments = BTreeMap::new();
    for set in &candidates {
        let topics = match &embedding {
            Some(emb) if !set.is_empty() => {
                let clusters = cluster_branch(emb, set, target_id, config)?;
                assignments.insert(set.direction, clusters.assignment.clone());
                clock.lap(match set.direction {
                    Direction::References => "clustering_references",
                    Direction::Citations => "clustering_citations",
                });
                let topics = write_cards(store, set.direction, clusters, label_model.as_ref(), config, &mut warnings)?;
                clock.lap(match set.direction {
                    Direction::References => "survey_references",
                    Direction::Citations => "survey_citations",
                });
                topics
            }
            _ => Vec::new(),
        };
        branches.push(topics);
    }
    let mut citation_topics = branches.pop().unwrap_or_default();
    let mut reference_topics = branches.pop().unwrap_or_default();

    let tree = build_tree(
        target,
        &mut reference_topics,
        &mut citation_topics,
        graph.reference_count(target_id),
        graph.citation_count(target_id),
        store,
    );
    let document = ResultDocument::assemble(
        target,
        tree,
        &reference_topics,
        &citation_topics,
        store,
        config.digest(),
        generated_at,
    );
    let bytes = document.to_bytes();
    clock.lap("serialize");

    Ok(MachineReadingResult {
        document,
        bytes,
        timings: clock.timings,
        warnings,
        candidates: candidates.iter().map(|c| (c.direction, c.len())).collect(),
        assignments,
    })
}

/// Expansion, PageRank over the expanded set plus the target, top cut.
pub fn select_candidates(
    graph: &CitationGraph,
    target_id: &str,
    direction: Direction,
    config: &PipelineConfig,
) -> Result<CandidateSet<f64>, PipelineError> {
    let expanded = graph.expand(target_id, direction, config.threshold, config.max_hops)?;
    if expanded.is_empty() {
        return Ok(CandidateSet::empty(direction));
    }
    let mut nodes: BTreeSet<String> = expanded.members.keys().cloned().collect();
    nodes.insert(target_id.to_string());
    let scores = graph.pagerank(&nodes, config.damping, config.tol, config.max_iter)?;
    Ok(expanded.select_top(&scores, config.candidate_limit)?)
}

fn shared_batch(target_id: &str, candidates: &[CandidateSet<f64>]) -> Vec<String> {
    let mut seen = BTreeSet::from([target_id.to_string()]);
    let mut ids = vec![target_id.to_string()];
    for set in candidates {
        for c in &set.papers {
            if seen.insert(c.id.clone()) {
                ids.push(c.id.clone());
            }
        }
    }
    ids
}

/// The text embedded for a paper: its abstract, or its title when the
/// abstract is blank.
fn embedding_text(paper: &PaperRecord) -> String {
    if paper.abstract_text.trim().is_empty() {
        paper.title.clone()
    } else {
        paper.abstract_text.clone()
    }
}

fn embed_batch(
    store: &CorpusStore,
    graph: &CitationGraph,
    ids: &[String],
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
    clock: &mut Clock,
) -> Result<EmbeddingMatrix<f64>, PipelineError> {
    let texts: Vec<String> = ids
        .iter()
        .map(|id| store.get(id).map(embedding_text).unwrap_or_default())
        .collect();
    let tfidf = TfidfModel::<f64>::fit(&texts)?;
    let sparse: Vec<_> = texts.iter().map(|t| tfidf.embed(t)).collect();
    let lexical = reduce_dense(ids, &sparse, config.embedding_dim)?;
    clock.lap("tfidf");

    let endpoint = config.providers.embedding.endpoint();
    let dense = match fetch_dense_embeddings(&endpoint, ids, &texts, &tfidf, config.embedding_dim, EMBED_BATCH) {
        Ok(m) => m,
        Err(e) => {
            warn_into(warnings, format!("embedding provider failed ({e}); using the TF-IDF fallback"));
            fetch_dense_embeddings(
                &ProviderEndpoint::absent(),
                ids,
                &texts,
                &tfidf,
                config.embedding_dim,
                EMBED_BATCH,
            )?
        }
    };
    clock.lap("dense_embeddings");

    let fused = fuse_embeddings(&lexical, &dense)?;
    let propagated = spectral_propagate(graph, &fused, config.steps, config.mix);
    clock.lap("propagation");
    Ok(propagated)
}

struct BranchClusters {
    assignment: ClusterAssignment<f64>,
    ranked: Vec<crate::relevance::RankedCluster<f64>>,
    degraded: bool,
}

fn cluster_branch(
    emb: &EmbeddingMatrix<f64>,
    set: &CandidateSet<f64>,
    target_id: &str,
    config: &PipelineConfig,
) -> Result<BranchClusters, PipelineError> {
    let ids: Vec<String> = set.papers.iter().map(|c| c.id.clone()).collect();
    let sub = emb
        .select(&ids)
        .ok_or_else(|| PipelineError::Internal("candidate missing from the embedding batch".into()))?;
    let n = ids.len();
    let degraded = n < 3;
    let assignment = if degraded {
        ClusterAssignment {
            ids: ids.clone(),
            labels: vec![0; n],
            k: 1,
            objective: 0.0,
            iterations: 0,
            history: vec![],
        }
    } else {
        let kernel = KernelMatrix::compute(&sub, config.kernel);
        let search = KSearch {
            k_min: config.k_min,
            k_max: config.k_max,
            seed: config.seed,
            ..KSearch::default()
        };
        cluster_auto(&kernel, search).ok_or_else(|| PipelineError::Internal("clustering produced nothing".into()))?
    };

    let target_row = emb
        .row_of(target_id)
        .ok_or_else(|| PipelineError::Internal("target missing from the embedding batch".into()))?;
    let mut scores = BTreeMap::new();
    let mut pagerank = BTreeMap::new();
    for c in &set.papers {
        let row = sub.row_of(&c.id).expect("selected row");
        scores.insert(c.id.clone(), score_relevance(target_row, row, c.hop, config.lambda)?);
        pagerank.insert(c.id.clone(), c.pagerank);
    }
    let ranked = rank_within_clusters(&assignment, &scores, &pagerank, config.topic_size)?;
    Ok(BranchClusters {
        assignment,
        ranked,
        degraded,
    })
}

fn write_cards(
    store: &CorpusStore,
    direction: Direction,
    clusters: BranchClusters,
    label_model: Option<&TfidfModel<f64>>,
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Vec<Topic>, PipelineError> {
    let summarizer = config.providers.summarizer.endpoint();
    let classifier = config.providers.classifier.endpoint();
    let mut topics = Vec::with_capacity(clusters.ranked.len());
    for ranked in clusters.ranked {
        let selected: Vec<&PaperRecord> = ranked.selected().iter().filter_map(|m| store.get(&m.id)).collect();
        if selected.is_empty() {
            continue;
        }
        let label = match (clusters.degraded, label_model) {
            (true, _) => DEGRADED_LABEL.to_string(),
            (false, Some(model)) => extract_topic_label(&selected, model),
            (false, None) => crate::survey::FALLBACK_LABEL.to_string(),
        };

        let mut documents: Vec<String> = selected.iter().map(|p| p.abstract_text.clone()).collect();
        if documents.iter().all(|d| d.trim().is_empty()) {
            documents = selected.iter().map(|p| p.title.clone()).collect();
        }
        let model = match label_model {
            Some(m) => m.clone(),
            None => TfidfModel::fit(&documents)?,
        };
        let general = match generate_general_sentence(&documents, &summarizer, &model) {
            Err(SurveyError::Provider(e)) => {
                warn_into(warnings, format!("summarizer failed ({e}); using the extractive fallback"));
                generate_general_sentence(&documents, &ProviderEndpoint::absent(), &model)?
            }
            other => other?,
        };

        let mut summaries = Vec::with_capacity(selected.len());
        for paper in &selected {
            let summary = match extract_summary_sentence(paper, &classifier) {
                Ok(s) => s,
                Err(e) => {
                    warn_into(warnings, format!("classifier failed ({e}); using the cue-phrase rule"));
                    extract_summary_sentence(paper, &ProviderEndpoint::absent())
                        .map_err(|e| PipelineError::Internal(e.to_string()))?
                }
            };
            let (tag, sentence) = align_subject_tense(&summary.sentence, paper);
            summaries.push(PaperSummary {
                paper_id: paper.id.clone(),
                citation_tag: tag,
                sentence,
            });
        }
        let card = build_survey_card(direction, label, general, summaries)?;
        topics.push((card, ranked));
    }
    Ok(topics)
}
