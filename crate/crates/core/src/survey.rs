//! Per-topic survey cards: a heading, one general sentence, and one
//! attributed summary sentence per selected paper.
//!
//! The summarizer and OBJECTIVE classifier are optional providers. Functions
//! that talk to one return the provider error instead of silently falling
//! back; pass [`ProviderEndpoint::absent`] to get the rule-based path.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PaperRecord;
use crate::embedding::TfidfModel;
use crate::graph::Direction;
use crate::provider::{
    ClassifyRequest, ClassifyResponse, ProviderEndpoint, ProviderError, SummarizeRequest,
    SummarizeResponse,
};
use crate::text::{split_sentences, title_case, tokenize};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurveyError {
    #[error("no nonempty abstract to summarize")]
    NoAbstracts,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("survey card invariant violated: {0}")]
    Invariant(String),
}

/// Label used when no candidate phrase survives tokenization.
pub const FALLBACK_LABEL: &str = "Topic";
/// Most papers a single card may summarize.
pub const MAX_CARD_PAPERS: usize = 5;
const PHRASE_LENGTH_BONUS: f64 = 1.2;
const MAX_PHRASE_TOKENS: usize = 3;

/// Picks a topic heading from the selected papers' titles and abstracts.
///
/// Every 1–3 token run (after tokenization and stopword removal, within a
/// title or an abstract) is a candidate. Its score is its total occurrence
/// count × the mean idf of its tokens × 1.2^(tokens − 1). The best phrase
/// wins, ties to the lexicographically smaller one, and is title-cased.
pub fn extract_topic_label(selected: &[&PaperRecord], tfidf: &TfidfModel<f64>) -> String {
    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for paper in selected {
        for field in [&paper.title, &paper.abstract_text] {
            let tokens = tokenize(field);
            for len in 1..=MAX_PHRASE_TOKENS {
                for gram in tokens.windows(len) {
                    *counts.entry(gram.to_vec()).or_default() += 1;
                }
            }
        }
    }
    let mut best: Option<(f64, String)> = None;
    for (gram, count) in counts {
        let mean_idf = gram.iter().map(|t| tfidf.idf_or_unseen(t)).sum::<f64>() / gram.len() as f64;
        let score = count as f64 * mean_idf * PHRASE_LENGTH_BONUS.powi(gram.len() as i32 - 1);
        let phrase = gram.join(" ");
        let better = match &best {
            None => true,
            Some((s, p)) => {
                let eps = 1e-12 * s.abs().max(1.0);
                score > s + eps || ((score - s).abs() <= eps && phrase < *p)
            }
        };
        if better {
            best = Some((score, phrase));
        }
    }
    best.map_or_else(|| FALLBACK_LABEL.to_string(), |(_, p)| title_case(&p))
}

/// One-sentence overview of a topic.
///
/// With a summarizer endpoint the abstracts go to `POST {base}/summarize`
/// and only the first sentence of the returned summary is kept. Without
/// one, the candidates are the first three sentences of every abstract and
/// the one whose TF-IDF vector is most similar to the candidates' centroid
/// wins (earliest on ties). A missing final terminator gets a period.
pub fn generate_general_sentence(
    abstracts: &[String],
    summarizer: &ProviderEndpoint,
    tfidf: &TfidfModel<f64>,
) -> Result<String, SurveyError> {
    let documents: Vec<String> = abstracts
        .iter()
        .filter(|a| !a.trim().is_empty())
        .cloned()
        .collect();
    if documents.is_empty() {
        return Err(SurveyError::NoAbstracts);
    }
    let sentence = if summarizer.is_configured() {
        let response: SummarizeResponse = summarizer.post_json(
            "summarize",
            &SummarizeRequest {
                documents: &documents,
            },
        )?;
        split_sentences(&response.summary)
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::Malformed("empty summary".into()))?
    } else {
        centroid_sentence(&documents, tfidf)
    };
    Ok(terminated(sentence))
}

fn centroid_sentence(documents: &[String], tfidf: &TfidfModel<f64>) -> String {
    let pool: Vec<String> = documents
        .iter()
        .flat_map(|d| split_sentences(d).into_iter().take(3))
        .collect();
    let vectors: Vec<_> = pool.iter().map(|s| tfidf.embed(s)).collect();
    let mut centroid = vec![0.0; tfidf.vocabulary_size()];
    for v in &vectors {
        for &(i, w) in &v.entries {
            centroid[i] += w;
        }
    }
    let norm = centroid.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in vectors.iter().enumerate() {
        let cos = if norm > 0.0 {
            v.entries.iter().map(|&(i, w)| w * centroid[i]).sum::<f64>() / norm
        } else {
            0.0
        };
        if cos > best.1 + 1e-12 {
            best = (k, cos);
        }
    }
    pool.into_iter().nth(best.0).unwrap_or_default()
}

fn terminated(sentence: String) -> String {
    if sentence.ends_with(['.', '!', '?']) {
        sentence
    } else {
        format!("{sentence}.")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Provider,
    RuleFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVerdict {
    pub sentence: String,
    pub is_objective: bool,
    pub score: f64,
    pub source: VerdictSource,
}

/// Phrases that mark a sentence as stating the paper's goal or contribution.
pub const CUE_PHRASES: [&str; 10] = [
    "we propose",
    "we present",
    "we introduce",
    "we develop",
    "we design",
    "this paper",
    "in this paper",
    "our goal",
    "aims to",
    "we describe",
];
pub const OBJECTIVE_THRESHOLD: f64 = 2.0;

/// Rule-based OBJECTIVE verdict for the sentence at `position` (0-based) of
/// its abstract: 2 points for any cue phrase, 1 for being among the first
/// three sentences; objective at 2 points or more.
pub fn rule_verdict(sentence: &str, position: usize) -> SentenceVerdict {
    let lower = sentence.to_lowercase();
    let cue = if CUE_PHRASES.iter().any(|c| lower.contains(c)) { 2.0 } else { 0.0 };
    let lead = if position < 3 { 1.0 } else { 0.0 };
    let score = cue + lead;
    SentenceVerdict {
        sentence: sentence.to_string(),
        is_objective: score >= OBJECTIVE_THRESHOLD,
        score,
        source: VerdictSource::RuleFallback,
    }
}

/// OBJECTIVE verdicts for the sentences of one abstract, in order.
pub fn classify_objective(
    sentences: &[String],
    classifier: &ProviderEndpoint,
) -> Result<Vec<SentenceVerdict>, ProviderError> {
    if !classifier.is_configured() {
        return Ok(sentences
            .iter()
            .enumerate()
            .map(|(i, s)| rule_verdict(s, i))
            .collect());
    }
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let response: ClassifyResponse = classifier.post_json("classify", &ClassifyRequest { sentences })?;
    if response.labels.len() != sentences.len() {
        return Err(ProviderError::RowCountMismatch {
            expected: sentences.len(),
            found: response.labels.len(),
        });
    }
    Ok(sentences
        .iter()
        .zip(response.labels)
        .map(|(s, label)| SentenceVerdict {
            sentence: s.clone(),
            is_objective: label,
            score: if label { 1.0 } else { 0.0 },
            source: VerdictSource::Provider,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarySentence {
    pub sentence: String,
    /// The abstract was empty and the title stands in.
    pub from_title: bool,
}

/// Picks the paper's highest-scoring OBJECTIVE sentence (earliest on ties),
/// or the abstract's first sentence when none qualifies.
pub fn extract_summary_sentence(
    paper: &PaperRecord,
    classifier: &ProviderEndpoint,
) -> Result<SummarySentence, ProviderError> {
    let sentences = split_sentences(&paper.abstract_text);
    if sentences.is_empty() {
        return Ok(SummarySentence {
            sentence: paper.title.trim().to_string(),
            from_title: true,
        });
    }
    let verdicts = classify_objective(&sentences, classifier)?;
    let mut best: Option<&SentenceVerdict> = None;
    for v in verdicts.iter().filter(|v| v.is_objective) {
        if best.is_none_or(|b| v.score > b.score) {
            best = Some(v);
        }
    }
    let sentence = best.map_or_else(|| sentences[0].clone(), |v| v.sentence.clone());
    Ok(SummarySentence {
        sentence,
        from_title: false,
    })
}

/// Sentence openings that refer to the paper's own authors, longest first.
pub const SUBJECT_PATTERNS: [&str; 6] = [
    "in this paper, we",
    "in this paper we",
    "this paper",
    "the authors",
    "our work",
    "we",
];

/// Present-tense reporting verbs and their past forms:
/// (base, third person singular, past).
pub const REPORTING_VERBS: [(&str, &str, &str); 30] = [
    ("propose", "proposes", "proposed"),
    ("present", "presents", "presented"),
    ("introduce", "introduces", "introduced"),
    ("develop", "develops", "developed"),
    ("design", "designs", "designed"),
    ("show", "shows", "showed"),
    ("describe", "describes", "described"),
    ("study", "studies", "studied"),
    ("investigate", "investigates", "investigated"),
    ("use", "uses", "used"),
    ("is", "is", "was"),
    ("are", "are", "were"),
    ("have", "has", "had"),
    ("demonstrate", "demonstrates", "demonstrated"),
    ("analyze", "analyzes", "analyzed"),
    ("explore", "explores", "explored"),
    ("evaluate", "evaluates", "evaluated"),
    ("examine", "examines", "examined"),
    ("address", "addresses", "addressed"),
    ("provide", "provides", "provided"),
    ("report", "reports", "reported"),
    ("extend", "extends", "extended"),
    ("apply", "applies", "applied"),
    ("consider", "considers", "considered"),
    ("focus", "focuses", "focused"),
    ("discuss", "discusses", "discussed"),
    ("formulate", "formulates", "formulated"),
    ("derive", "derives", "derived"),
    ("find", "finds", "found"),
    ("build", "builds", "built"),
];

pub fn past_tense(verb: &str) -> Option<&'static str> {
    let lower = verb.to_lowercase();
    REPORTING_VERBS
        .iter()
        .find(|(base, third, _)| lower == *base || lower == *third)
        .map(|&(_, _, past)| past)
}

/// "Surname et al. (year)", or "Surname (year)" for a single author. The
/// surname is the last whitespace token of the first author's name.
pub fn citation_tag(paper: &PaperRecord) -> String {
    let surname = paper
        .authors
        .first()
        .and_then(|a| a.split_whitespace().last())
        .unwrap_or("Anonymous");
    if paper.authors.len() > 1 {
        format!("{surname} et al. ({})", paper.year)
    } else {
        format!("{surname} ({})", paper.year)
    }
}

/// Rewrites a first-person opening into an attributed, past-tense one.
///
/// A leading subject pattern is replaced by the citation tag and a
/// reporting verb right after it is put in the past tense. Sentences
/// without such an opening are prefixed with `"tag: "` unchanged.
pub fn align_subject_tense(sentence: &str, paper: &PaperRecord) -> (String, String) {
    let tag = citation_tag(paper);
    let trimmed = sentence.trim();
    let Some(rest) = strip_subject(trimmed) else {
        return (tag.clone(), format!("{tag}: {trimmed}"));
    };
    let word_start = rest.len() - rest.trim_start().len();
    let word_len = rest[word_start..]
        .find(|c: char| !c.is_alphabetic())
        .unwrap_or(rest.len() - word_start);
    let word = &rest[word_start..word_start + word_len];
    let rewritten = match past_tense(word) {
        Some(past) if word_len > 0 => format!(
            "{tag}{}{past}{}",
            &rest[..word_start],
            &rest[word_start + word_len..]
        ),
        _ => format!("{tag}{rest}"),
    };
    (tag, rewritten)
}

fn strip_subject(sentence: &str) -> Option<&str> {
    SUBJECT_PATTERNS.iter().find_map(|pattern| {
        let head = sentence.get(..pattern.len())?;
        let rest = &sentence[pattern.len()..];
        let at_boundary = rest.chars().next().is_none_or(|c| !c.is_alphanumeric());
        (head.eq_ignore_ascii_case(pattern) && at_boundary).then_some(rest)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperSummary {
    pub paper_id: String,
    pub citation_tag: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyCard {
    pub direction: Direction,
    pub topic_label: String,
    pub general_sentence: String,
    pub paper_summaries: Vec<PaperSummary>,
}

/// Assembles a card, checking its invariants.
pub fn build_survey_card(
    direction: Direction,
    label: String,
    general: String,
    summaries: Vec<PaperSummary>,
) -> Result<SurveyCard, SurveyError> {
    let words = label.split_whitespace().count();
    if !(1..=4).contains(&words) {
        return Err(SurveyError::Invariant(format!("label {label:?} must have 1-4 words")));
    }
    if split_sentences(&general).len() != 1 || !general.ends_with(['.', '!', '?']) {
        return Err(SurveyError::Invariant(format!(
            "general sentence {general:?} must be exactly one terminated sentence"
        )));
    }
    if summaries.len() > MAX_CARD_PAPERS {
        return Err(SurveyError::Invariant(format!(
            "{} summaries exceed the limit of {MAX_CARD_PAPERS}",
            summaries.len()
        )));
    }
    if let Some(bad) = summaries.iter().find(|s| !s.sentence.starts_with(&s.citation_tag)) {
        return Err(SurveyError::Invariant(format!(
            "summary of {} does not start with its citation tag",
            bad.paper_id
        )));
    }
    Ok(SurveyCard {
        direction,
        topic_label: label,
        general_sentence: general,
        paper_summaries: summaries,
    })
}
