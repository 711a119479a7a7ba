//! Checks that a summary sentence is a verbatim source sentence, up to the
//! attribution rewrite.

use ideareader_core::survey::{REPORTING_VERBS, SUBJECT_PATTERNS};
use ideareader_core::text::split_sentences;
use ideareader_core::PaperRecord;

/// The source sentences a summary may come from: every abstract sentence
/// and the title.
pub fn source_sentences(paper: &PaperRecord) -> Vec<String> {
    let mut out: Vec<String> = split_sentences(&paper.abstract_text)
        .into_iter()
        .map(|s| s.trim().to_string())
        .collect();
    out.push(paper.title.trim().to_string());
    out
}

/// Accepts `summary` iff, for some source sentence `s`, it equals
/// `"{tag}: s"`, or `s` opens with an author-subject phrase that the tag
/// replaces (the next word optionally swapped for its past form from the
/// reporting-verb table).
pub fn summary_has_source(paper: &PaperRecord, tag: &str, summary: &str) -> bool {
    let Some(after_tag) = summary.strip_prefix(tag) else {
        return false;
    };
    source_sentences(paper).iter().any(|source| {
        if after_tag.strip_prefix(": ") == Some(source.as_str()) {
            return true;
        }
        SUBJECT_PATTERNS.iter().any(|pattern| {
            let lower = source.to_lowercase();
            if !lower.starts_with(pattern) {
                return false;
            }
            let rest = &source[pattern.len()..];
            if rest.chars().next().is_some_and(char::is_alphanumeric) {
                return false;
            }
            if after_tag == rest {
                return true;
            }
            REPORTING_VERBS.iter().any(|&(base, third, past)| {
                [base, third].iter().any(|form| {
                    [form.to_string(), capitalize(form)].iter().any(|written| {
                        rest.trim_start().starts_with(written.as_str())
                            && after_tag == rest.replacen(written.as_str(), past, 1)
                    })
                })
            })
        })
    })
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}
