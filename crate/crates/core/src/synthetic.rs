//! Seeded synthetic corpus with planted topics.
//!
//! Layout: one target paper; `reference_topics × per_topic` older papers it
//! reaches through references; `citation_topics × per_topic` newer papers
//! that reach it through citations; the rest unrelated noise. Each planted
//! topic has its own vocabulary, and papers mostly cite inside their topic.
//! Within a topic the papers form a binary heap (paper `i` cites `2i+1` and
//! `2i+2`, plus the odd extra link), so everything is reachable in a few hops.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::PaperRecord;

pub const TARGET_ID: &str = "target";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub papers: usize,
    pub reference_topics: usize,
    pub citation_topics: usize,
    pub per_topic: usize,
    /// Probability that a paper gets one extra citation into another topic.
    pub cross_topic_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            papers: 500,
            reference_topics: 4,
            citation_topics: 3,
            per_topic: 30,
            cross_topic_rate: 0.1,
            seed: 42,
        }
    }
}

/// A generated paper and the topic it was planted in (`ref-0`, `cit-1`,
/// `noise`, `target`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticPaper {
    #[serde(flatten)]
    pub record: PaperRecord,
    pub topic: String,
}

const REFERENCE_VOCABULARIES: [[&str; 12]; 4] = [
    ["graph", "node", "edge", "spectral", "laplacian", "vertex", "neighborhood", "adjacency", "walk", "community", "subgraph", "motif"],
    ["language", "translation", "token", "attention", "decoder", "encoder", "sentence", "vocabulary", "syntax", "parsing", "grammar", "lexical"],
    ["image", "pixel", "segmentation", "detection", "camera", "visual", "object", "texture", "scene", "resolution", "depth", "contour"],
    ["gradient", "convex", "stochastic", "convergence", "momentum", "descent", "regularization", "sparsity", "duality", "minimization", "proximal", "curvature"],
];

const CITATION_VOCABULARIES: [[&str; 12]; 3] = [
    ["recommendation", "user", "item", "rating", "preference", "click", "session", "ranking", "catalog", "shopper", "playlist", "feedback"],
    ["molecule", "protein", "chemical", "drug", "binding", "atom", "compound", "enzyme", "ligand", "bond", "solubility", "assay"],
    ["traffic", "road", "vehicle", "sensor", "trajectory", "route", "congestion", "intersection", "commute", "lane", "fleet", "transit"],
];

const NOISE_VOCABULARIES: [[&str; 12]; 4] = [
    ["quantum", "qubit", "circuit", "entanglement", "photon", "decoherence", "gate", "superposition", "spin", "cryogenic", "fidelity", "lattice"],
    ["soil", "crop", "irrigation", "harvest", "seed", "fertilizer", "drought", "yield", "farm", "livestock", "pasture", "rainfall"],
    ["galaxy", "stellar", "telescope", "cosmic", "redshift", "nebula", "planet", "orbit", "supernova", "luminosity", "halo", "quasar"],
    ["market", "price", "auction", "trade", "bidder", "equilibrium", "tariff", "inflation", "currency", "portfolio", "asset", "liquidity"],
];

const GENERIC: [&str; 10] = [
    "method", "approach", "framework", "analysis", "performance", "results", "evaluation", "technique", "system", "study",
];

const SURNAMES: [&str; 16] = [
    "Smith", "Chen", "Garcia", "Okafor", "Novak", "Tanaka", "Silva", "Kumar", "Muller", "Rossi", "Kim", "Haddad",
    "Larsen", "Ivanova", "Dubois", "Moreau",
];
const GIVEN: [&str; 12] = [
    "Ana", "Ben", "Chloe", "Dev", "Eli", "Fatima", "Goran", "Hana", "Ivan", "Jia", "Kofi", "Lena",
];
const VENUES: [&str; 5] = ["Proc. Learning Systems", "Journal of Data Mining", "Web Conference", "Graph Workshop", ""];

/// The target mixes the head words of every reference topic.
const TARGET_VOCABULARY: [&str; 12] = [
    "graph", "node", "edge", "language", "translation", "token", "image", "pixel", "segmentation", "gradient",
    "convex", "stochastic",
];

struct Writer {
    rng: ChaCha8Rng,
    vocab: &'static [&'static str],
}

impl Writer {
    fn word(&mut self) -> &'static str {
        self.vocab.choose(&mut self.rng).expect("non-empty vocabulary")
    }

    fn generic(&mut self) -> &'static str {
        GENERIC.choose(&mut self.rng).expect("non-empty")
    }

    fn title(&mut self) -> String {
        let words: Vec<&str> = self.vocab.choose_multiple(&mut self.rng, 3).copied().collect();
        crate::text::title_case(&format!("{} {} for {} {}", words[0], words[1], words[2], self.generic()))
    }

    fn abstract_text(&mut self) -> String {
        let mut sentences = Vec::new();
        let opening = match self.rng.random_range(0..3) {
            0 => format!("We propose a {} {} {} for {} {}.", self.word(), self.word(), self.generic(), self.word(), self.word()),
            1 => format!("This paper studies {} {} under {} {}.", self.word(), self.word(), self.word(), self.word()),
            _ => format!("We present a {} {} that exploits {} {}.", self.generic(), self.word(), self.word(), self.word()),
        };
        let background = format!(
            "Existing {} {} methods struggle with {} {}.",
            self.word(),
            self.word(),
            self.word(),
            self.word()
        );
        if self.rng.random_bool(0.5) {
            sentences.push(background);
            sentences.push(opening);
        } else {
            sentences.push(opening);
            sentences.push(background);
        }
        sentences.push(format!(
            "Our {} combines {} {} and {} {} to improve {}.",
            self.generic(),
            self.word(),
            self.word(),
            self.word(),
            self.word(),
            self.generic()
        ));
        sentences.push(format!(
            "Experiments on {} {} benchmarks show strong {}.",
            self.word(),
            self.word(),
            self.generic()
        ));
        sentences.join(" ")
    }

    fn authors(&mut self) -> Vec<String> {
        let n = self.rng.random_range(1..=3);
        (0..n)
            .map(|_| {
                format!(
                    "{} {}",
                    GIVEN.choose(&mut self.rng).expect("non-empty"),
                    SURNAMES.choose(&mut self.rng).expect("non-empty")
                )
            })
            .collect()
    }
}

/// Generates the corpus: the target, then reference topics, citation
/// topics and noise.
///
/// # Panics
/// If the spec asks for more planted papers than `papers - 1`, or for more
/// topics than there are built-in vocabularies.
pub fn generate(spec: &SyntheticSpec) -> Vec<SyntheticPaper> {
    assert!(spec.reference_topics <= REFERENCE_VOCABULARIES.len());
    assert!(spec.citation_topics <= CITATION_VOCABULARIES.len());
    let planted = (spec.reference_topics + spec.citation_topics) * spec.per_topic;
    assert!(planted < spec.papers, "corpus too small for the planted topics");
    let noise = spec.papers - 1 - planted;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.per_topic;
    let mut out = Vec::with_capacity(spec.papers);

    let id = |prefix: &str, topic: usize, i: usize| format!("{prefix}{topic}-{i:03}");
    let depth = |i: usize| (usize::BITS - (i + 1).leading_zeros() - 1) as i32;

    let mut writer = Writer {
        rng: ChaCha8Rng::seed_from_u64(rng.random()),
        vocab: &TARGET_VOCABULARY,
    };
    let mut target_refs = Vec::new();
    for t in 0..spec.reference_topics {
        for i in 0..3.min(n) {
            target_refs.push(id("r", t, i));
        }
    }
    out.push(SyntheticPaper {
        record: PaperRecord {
            id: TARGET_ID.into(),
            title: writer.title(),
            abstract_text: writer.abstract_text(),
            year: 2015,
            authors: writer.authors(),
            venue: VENUES[0].into(),
            reference_ids: target_refs,
        },
        topic: "target".into(),
    });

    for t in 0..spec.reference_topics {
        let mut writer = Writer {
            rng: ChaCha8Rng::seed_from_u64(rng.random()),
            vocab: &REFERENCE_VOCABULARIES[t],
        };
        for i in 0..n {
            let mut refs: Vec<String> = [2 * i + 1, 2 * i + 2]
                .into_iter()
                .filter(|&j| j < n)
                .map(|j| id("r", t, j))
                .collect();
            if i + 3 < n && writer.rng.random_bool(0.5) {
                let j = writer.rng.random_range(i + 3..n);
                refs.push(id("r", t, j));
            }
            if spec.reference_topics > 1 && writer.rng.random_bool(spec.cross_topic_rate) {
                let other = (t + writer.rng.random_range(1..spec.reference_topics)) % spec.reference_topics;
                refs.push(id("r", other, writer.rng.random_range(n / 2..n)));
            }
            out.push(SyntheticPaper {
                record: PaperRecord {
                    id: id("r", t, i),
                    title: writer.title(),
                    abstract_text: writer.abstract_text(),
                    year: 2014 - 2 * depth(i) - writer.rng.random_range(0..2),
                    authors: writer.authors(),
                    venue: VENUES.choose(&mut writer.rng).expect("non-empty").to_string(),
                    reference_ids: refs,
                },
                topic: format!("ref-{t}"),
            });
        }
    }

    for t in 0..spec.citation_topics {
        let mut writer = Writer {
            rng: ChaCha8Rng::seed_from_u64(rng.random()),
            vocab: &CITATION_VOCABULARIES[t],
        };
        for i in 0..n {
            let mut refs = if i < 3 {
                vec![TARGET_ID.to_string()]
            } else {
                vec![id("c", t, (i - 1) / 2)]
            };
            if i >= 3 && writer.rng.random_bool(0.5) {
                let j = writer.rng.random_range(0..i);
                if !refs.contains(&id("c", t, j)) {
                    refs.push(id("c", t, j));
                }
            }
            if spec.citation_topics > 1 && writer.rng.random_bool(spec.cross_topic_rate) {
                let other = (t + writer.rng.random_range(1..spec.citation_topics)) % spec.citation_topics;
                refs.push(id("c", other, writer.rng.random_range(0..n / 2)));
            }
            out.push(SyntheticPaper {
                record: PaperRecord {
                    id: id("c", t, i),
                    title: writer.title(),
                    abstract_text: writer.abstract_text(),
                    year: 2016 + 2 * depth(i) + writer.rng.random_range(0..2),
                    authors: writer.authors(),
                    venue: VENUES.choose(&mut writer.rng).expect("non-empty").to_string(),
                    reference_ids: refs,
                },
                topic: format!("cit-{t}"),
            });
        }
    }

    let mut writers: Vec<Writer> = NOISE_VOCABULARIES
        .iter()
        .map(|v| Writer {
            rng: ChaCha8Rng::seed_from_u64(rng.random()),
            vocab: v,
        })
        .collect();
    for i in 0..noise {
        let w = &mut writers[i % NOISE_VOCABULARIES.len()];
        let refs = (0..w.rng.random_range(0..=3usize).min(i))
            .map(|_| format!("n{:03}", w.rng.random_range(0..i)))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        out.push(SyntheticPaper {
            record: PaperRecord {
                id: format!("n{i:03}"),
                title: w.title(),
                abstract_text: w.abstract_text(),
                year: 1995 + (i as i32 % 28),
                authors: w.authors(),
                venue: VENUES.choose(&mut w.rng).expect("non-empty").to_string(),
                reference_ids: refs,
            },
            topic: "noise".into(),
        });
    }
    out
}

/// One JSON object per line, trailing newline.
pub fn to_jsonl(papers: &[SyntheticPaper]) -> String {
    let mut out = String::new();
    for p in papers {
        out.push_str(&serde_json::to_string(p).expect("paper serializes"));
        out.push('\n');
    }
    out
}
