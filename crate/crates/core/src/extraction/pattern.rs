//! Deterministic rule-based extractor used offline and in tests.
//!
//! Rules, applied per sentence in this order:
//!
//! 1. `X, such as Y1, Y2 and Y3` gives `(Yi, is_a, X)` for every listed item.
//!    The list ends after the item introduced by `and` / `or`.
//! 2. `X <verb> Y in <year>` gives `(X, verb, Y)` with context `year=<year>`.
//!    `X` is a run of capitalised words and `<verb>` a past-tense form
//!    (ending in `ed` or a listed irregular verb), optionally followed by
//!    one preposition (`worked at`, `collaborated with`).
//! 3. `X is a Y` / `X is an Y` gives `(X, is_a, Y)`.
//!
//! Noun phrases are cut at function words (and, before `X`, at past-tense
//! verbs), so `X` and `Y` hold at most three
//! content words.

use std::sync::OnceLock;

use regex::Regex;

use super::chunk::sentence_spans;
use super::{ExtractionResult, TextChunk};
use crate::graph::{ContextMap, ContextTriple, ExtractorKind, Provenance};

const MAX_PHRASE_WORDS: usize = 3;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "are", "as", "at", "be", "been", "before",
    "being", "between", "both", "but", "by", "can", "could", "did", "do", "does", "during", "each",
    "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "if", "in", "include",
    "includes", "including", "into", "is", "it", "its", "like", "many", "may", "more", "most",
    "much", "must", "not", "of", "on", "or", "other", "our", "over", "she", "should", "so",
    "some", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "through", "to", "under", "until", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whose", "will", "with", "within", "would", "you",
];

const DETERMINERS: &[&str] = &["a", "an", "the"];

const IRREGULAR_PAST: &[&str] = &[
    "became", "began", "brought", "built", "chose", "drew", "fought", "found", "gave", "grew",
    "held", "knew", "led", "left", "lost", "made", "met", "ran", "saw", "sent", "sold", "spoke",
    "taught", "took", "told", "won", "wrote",
];

fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word.to_lowercase().as_str())
}

fn is_past_tense(word: &str) -> bool {
    (word.len() > 3 && word.ends_with("ed")) || IRREGULAR_PAST.contains(&word)
}

fn clean_word(word: &str) -> &str {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\'' || c == '’'))
}

/// Longest run (up to the limit) of content words at the end of `text`.
fn trailing_phrase(text: &str) -> Option<String> {
    let mut words: Vec<&str> = Vec::new();
    for raw in text.split_whitespace().rev() {
        let word = clean_word(raw);
        if word.is_empty() || is_stopword(word) || is_past_tense(word) || words.len() == MAX_PHRASE_WORDS {
            break;
        }
        // Punctuation after a word ends an earlier phrase; before it, this one.
        if !words.is_empty() && !raw.ends_with(word) {
            break;
        }
        words.push(word);
        if !raw.starts_with(word) {
            break;
        }
    }
    words.reverse();
    (!words.is_empty()).then(|| words.join(" "))
}

/// Longest run (up to the limit) of content words at the start of `text`,
/// after skipping determiners.
fn leading_phrase(text: &str) -> Option<String> {
    let mut words = Vec::new();
    let mut iter = text.split_whitespace().peekable();
    while iter.peek().is_some_and(|w| DETERMINERS.contains(&clean_word(w).to_lowercase().as_str())) {
        iter.next();
    }
    for raw in iter {
        let word = clean_word(raw);
        if word.is_empty() || is_stopword(word) || words.len() == MAX_PHRASE_WORDS {
            break;
        }
        if !words.is_empty() && !raw.starts_with(word) {
            break;
        }
        words.push(word);
        if !raw.ends_with(word) {
            break;
        }
    }
    (!words.is_empty()).then(|| words.join(" "))
}

fn such_as_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i),\s+such\s+as\s+").unwrap())
}

fn dated_event_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)
            (?P<subject>\p{Lu}[\p{L}\p{N}'’-]*(?:\s+\p{Lu}[\p{L}\p{N}'’-]*)*)
            \s+(?P<verb>\p{Ll}+(?:\s+(?:with|to|at|for|from|on|into|under))?)
            \s+(?P<object>[\p{L}\p{N}'’-]+(?:\s+[\p{L}\p{N}'’-]+){0,4}?)
            \s+in\s+(?P<year>\d{4})\b",
        )
        .unwrap()
    })
}

fn is_a_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s+is\s+an?\s+").unwrap())
}

/// Text from the last clause break before `end`.
fn clause_before(sentence: &str, end: usize) -> &str {
    let head = &sentence[..end];
    let start = head.rfind([',', ';', ':', '(']).map_or(0, |i| i + 1);
    &head[start..]
}

/// Text up to the next clause break after `start`.
fn clause_after(sentence: &str, start: usize) -> &str {
    let tail = &sentence[start..];
    let end = tail.find(['.', ';', ':', '!', '?', '(', ')']).unwrap_or(tail.len());
    &tail[..end]
}

fn such_as(sentence: &str, out: &mut Vec<(String, String, String, ContextMap)>) {
    for m in such_as_re().find_iter(sentence) {
        let Some(class) = trailing_phrase(clause_before(sentence, m.start())) else {
            continue;
        };
        let list = clause_after(sentence, m.end());
        for part in list.split(',') {
            let padded = format!(" {part} ");
            let closes = padded.contains(" and ") || padded.contains(" or ");
            for item in part.split(" and ").flat_map(|p| p.split(" or ")) {
                if let Some(member) = leading_phrase(item) {
                    out.push((member, "is_a".into(), class.clone(), ContextMap::new()));
                }
            }
            if closes {
                break;
            }
        }
    }
}

fn dated_event(sentence: &str, out: &mut Vec<(String, String, String, ContextMap)>) {
    for caps in dated_event_re().captures_iter(sentence) {
        let verb = &caps["verb"];
        let head = verb.split_whitespace().next().unwrap_or_default();
        if !is_past_tense(head) || is_stopword(head) {
            continue;
        }
        let subject = caps["subject"]
            .split_whitespace()
            .skip_while(|w| DETERMINERS.contains(&w.to_lowercase().as_str()))
            .collect::<Vec<_>>()
            .join(" ");
        let Some(object) = leading_phrase(&caps["object"]) else {
            continue;
        };
        if subject.is_empty() {
            continue;
        }
        let mut ctx = ContextMap::new();
        ctx.insert("year", &caps["year"]).expect("non-empty year");
        out.push((subject, verb.to_string(), object, ctx));
    }
}

fn is_a(sentence: &str, out: &mut Vec<(String, String, String, ContextMap)>) {
    for m in is_a_re().find_iter(sentence) {
        let Some(subject) = trailing_phrase(clause_before(sentence, m.start())) else {
            continue;
        };
        let Some(class) = leading_phrase(clause_after(sentence, m.end())) else {
            continue;
        };
        out.push((subject, "is_a".into(), class, ContextMap::new()));
    }
}

/// Applies the fixed rule set to every sentence of `chunk`.
pub fn pattern_extract(chunk: &TextChunk) -> ExtractionResult {
    let provenance = Provenance::new(&chunk.source_id, chunk.chunk_index, ExtractorKind::Pattern);
    let mut result = ExtractionResult::empty(&chunk.source_id, chunk.chunk_index);
    let mut found = Vec::new();
    for (start, end) in sentence_spans(&chunk.text) {
        let sentence = &chunk.text[start..end];
        such_as(sentence, &mut found);
        dated_event(sentence, &mut found);
        is_a(sentence, &mut found);
    }
    for (s, p, o, ctx) in found {
        if let Some(triple) = ContextTriple::new(&s, &p, &o, ctx, provenance.clone()) {
            result.triples.push(triple);
        }
    }
    result.raw_response = result
        .triples
        .iter()
        .map(super::format_triple_line)
        .collect::<Vec<_>>()
        .join("\n");
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Vec<(String, String, String, String)> {
        pattern_extract(&TextChunk::new("doc", 0, text))
            .triples
            .into_iter()
            .map(|t| (t.subject, t.predicate, t.object, t.context.to_string()))
            .collect()
    }

    fn t(s: &str, p: &str, o: &str, ctx: &str) -> (String, String, String, String) {
        (s.into(), p.into(), o.into(), ctx.into())
    }

    #[test]
    fn curie_sentence() {
        assert_eq!(
            run("Marie Curie discovered radium in 1898"),
            [t("Marie Curie", "discovered", "radium", "{year=1898}")]
        );
    }

    #[test]
    fn such_as_rule() {
        assert_eq!(run("fruits, such as apples"), [t("apples", "is_a", "fruits", "{}")]);
        assert_eq!(
            run("He studied noble gases, such as neon, argon and xenon."),
            [
                t("neon", "is_a", "noble gases", "{}"),
                t("argon", "is_a", "noble gases", "{}"),
                t("xenon", "is_a", "noble gases", "{}"),
            ]
        );
    }

    #[test]
    fn such_as_list_ends_after_conjunction() {
        assert_eq!(
            run("Companies, such as Apple and Microsoft, sell phones."),
            [t("Apple", "is_a", "Companies", "{}"), t("Microsoft", "is_a", "Companies", "{}")]
        );
    }

    #[test]
    fn dated_verb_with_preposition() {
        assert_eq!(
            run("Lise Meitner collaborated with Enrico Fermi in 1934."),
            [t("Lise Meitner", "collaborated with", "Enrico Fermi", "{year=1934}")]
        );
    }

    #[test]
    fn is_a_rule() {
        assert_eq!(run("Paris is a city in France."), [t("Paris", "is_a", "city", "{}")]);
        assert_eq!(
            run("Radium is an radioactive element."),
            [t("Radium", "is_a", "radioactive element", "{}")]
        );
    }

    #[test]
    fn no_rule_matches() {
        assert!(run("The sky was blue.").is_empty());
        assert!(run("They went home in 1898.").is_empty());
    }

    #[test]
    fn leading_determiner_dropped_from_dated_subject() {
        assert_eq!(
            run("The Royal Society awarded the medal in 1903."),
            [t("Royal Society", "awarded", "medal", "{year=1903}")]
        );
    }

    #[test]
    fn multiple_sentences_in_order() {
        let got = run("Einstein published relativity in 1905. Princeton is a university.");
        assert_eq!(
            got,
            [
                t("Einstein", "published", "relativity", "{year=1905}"),
                t("Princeton", "is_a", "university", "{}"),
            ]
        );
    }

    #[test]
    fn provenance_is_pattern() {
        let r = pattern_extract(&TextChunk::new("src", 7, "Paris is a city."));
        assert_eq!(r.source_id, "src");
        assert_eq!(r.chunk_index, 7);
        assert!(r.triples.iter().all(|t| t.provenance.extractor == ExtractorKind::Pattern
            && t.provenance.chunk_index == 7
            && t.provenance.source_id == "src"));
        assert_eq!(r.raw_response, "(Paris | is_a | city)");
    }
}
