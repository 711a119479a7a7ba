use std::collections::BTreeMap;
use std::path::PathBuf;

use ideareader_core::{CitationGraph, CorpusStore};

pub const SYNTHETIC_CORPUS: &str = "synthetic_corpus.jsonl";

/// Path inside the core crate's `tests/fixtures` directory.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn synthetic_corpus() -> (CorpusStore, CitationGraph) {
    let store = CorpusStore::ingest(fixture_path(SYNTHETIC_CORPUS)).expect("fixture corpus");
    let graph = CitationGraph::build(&store);
    (store, graph)
}

/// Planted topic of every fixture paper, read from its `topic` field.
pub fn planted_topics() -> BTreeMap<String, String> {
    let text = std::fs::read_to_string(fixture_path(SYNTHETIC_CORPUS)).expect("fixture corpus");
    text.lines()
        .map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).expect("fixture line");
            (
                v["id"].as_str().expect("id").to_string(),
                v["topic"].as_str().expect("topic").to_string(),
            )
        })
        .collect()
}

/// Writes `actual` to the golden file when `IDEAREADER_BLESS=1`; otherwise
/// returns whether it matches the recorded bytes.
pub fn check_golden(name: &str, actual: &[u8]) -> Result<(), String> {
    let path = fixture_path(name);
    if std::env::var("IDEAREADER_BLESS").as_deref() == Ok("1") {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("missing golden file {}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let at = expected.iter().zip(actual).position(|(a, b)| a != b).unwrap_or(expected.len().min(actual.len()));
        Err(format!(
            "{name} differs from the golden bytes at offset {at} ({} vs {} bytes)",
            actual.len(),
            expected.len()
        ))
    }
}
