//! Paper corpus ingestion and lookup.
//!
//! A corpus file holds one JSON object per line with the fields `id`,
//! `title`, `abstract`, `year`, `authors`, `venue` and `references`. Unknown
//! fields are ignored and blank lines skipped. Ingestion keeps the first
//! record for a repeated id and drops self-references and references to ids
//! that are not in the corpus, counting every drop.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::raw_tokens;

const STORE_PAPERS_FILE: &str = "papers.jsonl";
const STORE_STATS_FILE: &str = "stats.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("corpus contains no records")]
    Empty,
    #[error("store at {path} is invalid: {message}")]
    InvalidStore { path: PathBuf, message: String },
}

/// One publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    pub authors: Vec<String>,
    pub venue: String,
    #[serde(rename = "references")]
    pub reference_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestionStats {
    pub records_read: usize,
    pub stored: usize,
    pub duplicates_dropped: usize,
    pub dangling_dropped: usize,
    pub self_edges_dropped: usize,
    /// Repeated ids inside a single record's reference list.
    pub repeated_references_dropped: usize,
}

/// Immutable, validated collection of papers keyed by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStore {
    papers: BTreeMap<String, PaperRecord>,
    stats: IngestionStats,
}

impl CorpusStore {
    pub fn ingest(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(BufReader::new(file)).map_err(|e| match e {
            CorpusError::Io { source, .. } => CorpusError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut stats = IngestionStats::default();
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: PathBuf::new(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: PaperRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if record.id.is_empty() {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    message: "empty id".into(),
                });
            }
            stats.records_read += 1;
            if seen.insert(record.id.clone()) {
                order.push(record);
            } else {
                stats.duplicates_dropped += 1;
            }
        }
        if order.is_empty() {
            return Err(CorpusError::Empty);
        }

        let mut papers = BTreeMap::new();
        for mut record in order {
            let mut kept = HashSet::new();
            let refs = std::mem::take(&mut record.reference_ids);
            for r in refs {
                if r == record.id {
                    stats.self_edges_dropped += 1;
                } else if !seen.contains(&r) {
                    stats.dangling_dropped += 1;
                } else if !kept.insert(r.clone()) {
                    stats.repeated_references_dropped += 1;
                } else {
                    record.reference_ids.push(r);
                }
            }
            papers.insert(record.id.clone(), record);
        }
        stats.stored = papers.len();
        Ok(Self { papers, stats })
    }

    pub fn get(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.papers.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn stats(&self) -> IngestionStats {
        self.stats
    }

    /// Papers in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    /// Title search by token overlap.
    ///
    /// A paper scores the number of distinct query tokens present among its
    /// title tokens (case-insensitive). Zero-score papers are excluded; ties
    /// go to the newer paper, then the smaller id.
    pub fn search(&self, query: &str, limit: usize) -> Vec<&PaperRecord> {
        let query: BTreeSet<String> = raw_tokens(query).collect();
        if query.is_empty() || limit == 0 {
            return Vec::new();
        }
        let mut hits: Vec<(usize, &PaperRecord)> = self
            .papers
            .values()
            .filter_map(|p| {
                let title: HashSet<String> = raw_tokens(&p.title).collect();
                let score = query.iter().filter(|t| title.contains(*t)).count();
                (score > 0).then_some((score, p))
            })
            .collect();
        hits.sort_by(|(sa, a), (sb, b)| {
            sb.cmp(sa)
                .then_with(|| b.year.cmp(&a.year))
                .then_with(|| a.id.cmp(&b.id))
        });
        hits.into_iter().take(limit).map(|(_, p)| p).collect()
    }

    /// Writes the validated corpus and its ingestion statistics into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
        let dir = dir.as_ref();
        let io = |source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        let mut out = BufWriter::new(File::create(dir.join(STORE_PAPERS_FILE)).map_err(io)?);
        for paper in self.papers.values() {
            let line = serde_json::to_string(paper).expect("paper record serializes");
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)?;
        let stats = serde_json::to_string_pretty(&self.stats).expect("stats serialize");
        fs::write(dir.join(STORE_STATS_FILE), stats + "\n").map_err(io)?;
        Ok(())
    }

    /// Loads a store written by [`CorpusStore::save`], keeping the original
    /// ingestion statistics.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref();
        let mut store = Self::ingest(dir.join(STORE_PAPERS_FILE))?;
        let stats_path = dir.join(STORE_STATS_FILE);
        let raw = fs::read_to_string(&stats_path).map_err(|source| CorpusError::Io {
            path: stats_path.clone(),
            source,
        })?;
        let stats: IngestionStats =
            serde_json::from_str(&raw).map_err(|e| CorpusError::InvalidStore {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?;
        if stats.stored != store.len() {
            return Err(CorpusError::InvalidStore {
                path: dir.to_path_buf(),
                message: format!(
                    "stats record {} papers but {} were loaded",
                    stats.stored,
                    store.len()
                ),
            });
        }
        store.stats = stats;
        Ok(store)
    }
}
