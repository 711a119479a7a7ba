//! The tracing-and-evolution tree, the canonical result document and the
//! printable report.
//!
//! The root is the target paper. The left branch holds the topics that
//! inspired it (reference side), the right branch the topics it influenced
//! (citation side), so ideas flow left to right. Topics are ordered by their
//! strongest member's relevance; papers inside a topic node chronologically.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{CorpusStore, PaperRecord};
use crate::graph::Direction;
use crate::relevance::RankedCluster;
use crate::survey::SurveyCard;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePaper {
    pub id: String,
    pub title: String,
    pub year: i32,
    #[serde(serialize_with = "round6")]
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicNode {
    pub label: String,
    pub direction: Direction,
    pub papers: Vec<TreePaper>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRoot {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub reference_count: usize,
    pub citation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTree {
    pub root: TreeRoot,
    #[serde(rename = "left")]
    pub reference_branch: Vec<TopicNode>,
    #[serde(rename = "right")]
    pub citation_branch: Vec<TopicNode>,
}

/// A topic's survey card together with its ranked members.
pub type Topic = (SurveyCard, RankedCluster<f64>);

/// Builds the tree and puts both topic lists into tree order.
///
/// Topics are sorted by descending best relevance (ties keep their input
/// order) and repeated labels within a branch get " II", " III", ...
/// suffixes; the cards are relabeled to match. Each node lists the card's
/// selected papers by ascending year, then id.
pub fn build_tree(
    target: &PaperRecord,
    reference_topics: &mut [Topic],
    citation_topics: &mut [Topic],
    reference_count: usize,
    citation_count: usize,
    store: &CorpusStore,
) -> EvolutionTree {
    EvolutionTree {
        root: TreeRoot {
            id: target.id.clone(),
            title: target.title.clone(),
            year: target.year,
            reference_count,
            citation_count,
        },
        reference_branch: branch(reference_topics, Direction::References, store),
        citation_branch: branch(citation_topics, Direction::Citations, store),
    }
}

fn branch(topics: &mut [Topic], direction: Direction, store: &CorpusStore) -> Vec<TopicNode> {
    topics.sort_by(|(_, a), (_, b)| {
        let a = a.max_total().unwrap_or(f64::NEG_INFINITY);
        let b = b.max_total().unwrap_or(f64::NEG_INFINITY);
        b.partial_cmp(&a).unwrap_or(Ordering::Equal)
    });
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut nodes = Vec::with_capacity(topics.len());
    for (card, ranked) in topics.iter_mut() {
        let base = card.topic_label.clone();
        let label = loop {
            let count = seen.entry(base.clone()).or_insert(0);
            *count += 1;
            let candidate = if *count == 1 {
                base.clone()
            } else {
                format!("{base} {}", roman(*count))
            };
            // A suffixed label may collide with a literal one; keep counting.
            if *count == 1 || !seen.contains_key(&candidate) {
                seen.entry(candidate.clone()).or_insert(1);
                break candidate;
            }
        };
        card.topic_label = label.clone();
        let mut papers: Vec<TreePaper> = ranked
            .selected()
            .iter()
            .filter_map(|m| {
                store.get(&m.id).map(|p| TreePaper {
                    id: p.id.clone(),
                    title: p.title.clone(),
                    year: p.year,
                    relevance: m.score.total,
                })
            })
            .collect();
        papers.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.id.cmp(&b.id)));
        nodes.push(TopicNode {
            label,
            direction,
            papers,
        });
    }
    nodes
}

fn roman(n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
        (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I"),
    ];
    let mut n = n;
    let mut out = String::new();
    for &(value, glyph) in &TABLE {
        while n >= value {
            out.push_str(glyph);
            n -= value;
        }
    }
    out
}

fn round6<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_f64(round_to_6(*value))
}

pub fn round_to_6(value: f64) -> f64 {
    let r = (value * 1e6).round() / 1e6;
    if r == 0.0 { 0.0 } else { r }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub authors: Vec<String>,
    pub venue: String,
    pub reference_count: usize,
    pub citation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardPaper {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub citation_tag: String,
    pub summary_sentence: String,
    #[serde(serialize_with = "round6")]
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCard {
    pub label: String,
    pub general_sentence: String,
    pub papers: Vec<CardPaper>,
}

/// The canonical machine-reading result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub target: TargetInfo,
    pub topics_inspiring: Vec<TopicCard>,
    pub topics_influenced: Vec<TopicCard>,
    pub tree: EvolutionTree,
    pub config_digest: String,
    pub generated_at: String,
}

impl ResultDocument {
    /// Collects the tree and the (tree-ordered) topic cards into a document.
    pub fn assemble(
        target: &PaperRecord,
        tree: EvolutionTree,
        reference_topics: &[Topic],
        citation_topics: &[Topic],
        store: &CorpusStore,
        config_digest: impl Into<String>,
        generated_at: impl Into<String>,
    ) -> Self {
        Self {
            target: TargetInfo {
                id: target.id.clone(),
                title: target.title.clone(),
                year: target.year,
                authors: target.authors.clone(),
                venue: target.venue.clone(),
                reference_count: tree.root.reference_count,
                citation_count: tree.root.citation_count,
            },
            topics_inspiring: cards(reference_topics, store),
            topics_influenced: cards(citation_topics, store),
            tree,
            config_digest: config_digest.into(),
            generated_at: generated_at.into(),
        }
    }

    /// Canonical bytes: two-space indented JSON in declaration key order,
    /// reals rounded to six decimals, trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("result document serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Ids per branch, as listed in the cards and in the tree.
    pub fn branch_ids(&self, direction: Direction) -> (Vec<String>, Vec<String>) {
        let (cards, nodes) = match direction {
            Direction::References => (&self.topics_inspiring, &self.tree.reference_branch),
            Direction::Citations => (&self.topics_influenced, &self.tree.citation_branch),
        };
        let mut from_cards: Vec<String> =
            cards.iter().flat_map(|c| c.papers.iter().map(|p| p.id.clone())).collect();
        let mut from_tree: Vec<String> =
            nodes.iter().flat_map(|n| n.papers.iter().map(|p| p.id.clone())).collect();
        from_cards.sort();
        from_tree.sort();
        (from_cards, from_tree)
    }
}

fn cards(topics: &[Topic], store: &CorpusStore) -> Vec<TopicCard> {
    topics
        .iter()
        .map(|(card, ranked)| {
            let relevance: BTreeMap<&str, f64> = ranked
                .members
                .iter()
                .map(|m| (m.id.as_str(), m.score.total))
                .collect();
            TopicCard {
                label: card.topic_label.clone(),
                general_sentence: card.general_sentence.clone(),
                papers: card
                    .paper_summaries
                    .iter()
                    .map(|s| {
                        let paper = store.get(&s.paper_id);
                        CardPaper {
                            id: s.paper_id.clone(),
                            title: paper.map(|p| p.title.clone()).unwrap_or_default(),
                            year: paper.map_or(0, |p| p.year),
                            citation_tag: s.citation_tag.clone(),
                            summary_sentence: s.sentence.clone(),
                            relevance: relevance.get(s.paper_id.as_str()).copied().unwrap_or(0.0),
                        }
                    })
                    .collect(),
            }
        })
        .collect()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const REPORT_STYLE: &str = "body{font-family:Georgia,serif;max-width:52rem;margin:2rem auto;padding:0 1rem;color:#222;line-height:1.5}\
h1{font-size:1.6rem;margin-bottom:.2rem}h2{border-bottom:1px solid #ccc;padding-bottom:.2rem;margin-top:2rem}\
.meta{color:#555}.topic{margin:1rem 0;padding:.8rem 1rem;border:1px solid #ddd;border-radius:4px;page-break-inside:avoid}\
.general{font-style:italic}.empty{color:#777}pre.outline{background:#f7f7f7;padding:1rem;overflow-x:auto;font-size:.85rem}\
footer{margin-top:2rem;color:#777;font-size:.8rem}@media print{body{margin:0}}";

/// Renders the result as a single self-contained HTML page.
pub fn render_report(doc: &ResultDocument) -> String {
    let t = &doc.target;
    let mut html = String::new();
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Idea flow: {}</title>\n<style>{REPORT_STYLE}</style>\n</head>\n<body>\n",
        escape(&t.title)
    );
    let _ = writeln!(html, "<header class=\"target\">\n<h1>{}</h1>", escape(&t.title));
    let mut meta = vec![t.authors.join(", ")];
    if !t.venue.is_empty() {
        meta.push(t.venue.clone());
    }
    meta.push(t.year.to_string());
    let _ = writeln!(html, "<p class=\"meta\">{}</p>", escape(&meta.join(" · ")));
    let _ = writeln!(
        html,
        "<p class=\"counts\">References: {} · Citations: {}</p>",
        t.reference_count, t.citation_count
    );
    for (caption, cards) in [
        ("Inspiring topics", &doc.topics_inspiring),
        ("Influenced topics", &doc.topics_influenced),
    ] {
        let labels: Vec<String> = cards.iter().map(|c| escape(&c.label)).collect();
        let labels = if labels.is_empty() { "none".to_string() } else { labels.join("; ") };
        let _ = writeln!(html, "<p class=\"topics\">{caption}: {labels}</p>");
    }
    html.push_str("</header>\n");

    branch_section(
        &mut html,
        "inspiring",
        "Papers that inspired this work",
        &doc.topics_inspiring,
        "No referenced papers found.",
    );
    branch_section(
        &mut html,
        "influenced",
        "Papers influenced by this work",
        &doc.topics_influenced,
        "No citing papers found.",
    );

    html.push_str("<section id=\"tree\">\n<h2>Tracing and evolution tree</h2>\n<pre class=\"outline\">");
    html.push_str(&escape(&tree_outline(&doc.tree)));
    html.push_str("</pre>\n</section>\n");
    let _ = writeln!(
        html,
        "<footer>Configuration {} · generated {}</footer>\n</body>\n</html>",
        escape(&doc.config_digest),
        escape(&doc.generated_at)
    );
    html
}

fn branch_section(html: &mut String, id: &str, heading: &str, cards: &[TopicCard], empty: &str) {
    let _ = writeln!(html, "<section class=\"branch\" id=\"{id}\">\n<h2>{heading}</h2>");
    if cards.is_empty() {
        let _ = writeln!(html, "<p class=\"empty\">{empty}</p>");
    }
    for card in cards {
        let _ = writeln!(
            html,
            "<section class=\"topic\">\n<h3>{}</h3>\n<p class=\"general\">{}</p>\n<ul class=\"summaries\">",
            escape(&card.label),
            escape(&card.general_sentence)
        );
        for p in &card.papers {
            let _ = writeln!(html, "<li>{}</li>", escape(&p.summary_sentence));
        }
        html.push_str("</ul>\n</section>\n");
    }
    html.push_str("</section>\n");
}

/// Indented plain-text outline: inspiring branch, root, influenced branch.
pub fn tree_outline(tree: &EvolutionTree) -> String {
    let mut out = String::new();
    outline_branch(&mut out, "Inspired by", &tree.reference_branch, "no referenced papers found");
    let _ = writeln!(
        out,
        "=> {} ({}) [{}]",
        tree.root.title, tree.root.year, tree.root.id
    );
    outline_branch(&mut out, "Influenced", &tree.citation_branch, "no citing papers found");
    out
}

fn outline_branch(out: &mut String, label: &str, nodes: &[TopicNode], empty: &str) {
    let _ = writeln!(out, "{label}");
    if nodes.is_empty() {
        let _ = writeln!(out, "  ({empty})");
    }
    for node in nodes {
        let _ = writeln!(out, "  {}", node.label);
        for p in &node.papers {
            let _ = writeln!(out, "    {}  {} [{}]", p.year, p.title, p.id);
        }
    }
}
