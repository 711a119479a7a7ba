use ideareader_core::synthetic::{generate, to_jsonl, SyntheticSpec};
use ideareader_testkit::fixtures::SYNTHETIC_CORPUS;

#[test]
fn fixture_matches_generator() {
    let text = to_jsonl(&generate(&SyntheticSpec::default()));
    ideareader_testkit::check_golden(SYNTHETIC_CORPUS, text.as_bytes()).unwrap();
}
