//! Tokenization, the built-in stopword list and the sentence splitter shared
//! by the embedding and survey stages.

/// Version tag of [`STOPWORDS`]; bump whenever the list changes.
pub const STOPWORDS_VERSION: u32 = 1;

/// Fifty common English function words removed before TF-IDF and labeling.
pub const STOPWORDS: [&str; 50] = [
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "do", "for", "from", "has", "have", "in", "into", "is", "it",
    "its", "more", "not", "of", "on", "or", "our", "so", "such", "than", "that", "the", "their",
    "these", "this", "to", "was", "we", "were", "which", "while", "with", "within", "would",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn raw_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Tokens used for TF-IDF and topic labels: raw tokens of at least two
/// characters that are not stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_tokens(text)
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .collect()
}

/// Abbreviations that end in a period without ending a sentence.
pub const ABBREVIATIONS: [&str; 5] = ["e.g.", "i.e.", "et al.", "Fig.", "Eq."];

/// Splits text into sentences. A sentence ends at `.`, `!` or `?` followed by
/// whitespace or end of input, unless the text up to the terminator ends with
/// one of [`ABBREVIATIONS`]. Sentences are trimmed; inner whitespace is kept.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if !at_boundary || (c == '.' && ends_with_abbreviation(&text[start..end])) {
            continue;
        }
        push_trimmed(&mut sentences, &text[start..end]);
        start = end;
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn ends_with_abbreviation(prefix: &str) -> bool {
    ABBREVIATIONS.iter().any(|abbr| {
        prefix.ends_with(abbr) && {
            let before = &prefix[..prefix.len() - abbr.len()];
            before.chars().next_back().is_none_or(|c| !c.is_alphanumeric())
        }
    })
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// Uppercases the first character of every whitespace-separated word.
pub fn title_case(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(|word| {
            let mut cs = word.chars();
            match cs.next() {
                Some(first) => first.to_uppercase().chain(cs).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stopword_list_is_sorted_and_sized() {
        let mut sorted = STOPWORDS;
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
        assert_eq!(STOPWORDS.len(), 50);
    }

    #[test]
    fn tokenization_rules() {
        assert_eq!(
            tokenize("The Graph-based model, a GNN: x y 42!"),
            vec!["graph", "based", "model", "gnn", "42"]
        );
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(split_sentences("A. B. C."), vec!["A.", "B.", "C."]);
        assert_eq!(split_sentences("Is it? Yes! Done"), vec!["Is it?", "Yes!", "Done"]);
        assert_eq!(split_sentences("Value 3.5 holds."), vec!["Value 3.5 holds."]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        let text = "Models, e.g. transformers, work. Smith et al. showed it. See Fig. 2 now.";
        assert_eq!(
            split_sentences(text),
            vec!["Models, e.g. transformers, work.", "Smith et al. showed it.", "See Fig. 2 now."]
        );
    }

    #[test]
    fn title_casing() {
        assert_eq!(title_case("graph neural network"), "Graph Neural Network");
    }

    proptest! {
        #[test]
        fn split_then_join_is_idempotent(words in proptest::collection::vec("[a-zA-Z]{1,8}[.!?]?", 1..20)) {
            let text = words.join(" ");
            let once = split_sentences(&text).join(" ");
            let twice = split_sentences(&once).join(" ");
            prop_assert_eq!(once, twice);
        }
    }
}
