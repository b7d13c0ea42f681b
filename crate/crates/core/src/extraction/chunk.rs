use serde::{Deserialize, Serialize};

/// A contiguous slice of a source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChunk {
    pub source_id: String,
    pub chunk_index: usize,
    pub text: String,
    /// Byte offset of `text` within the source document.
    #[serde(default)]
    pub offset: usize,
}

impl TextChunk {
    pub fn new(source_id: impl Into<String>, chunk_index: usize, text: impl Into<String>) -> Self {
        Self {
            source_id: source_id.into(),
            chunk_index,
            text: text.into(),
            offset: 0,
        }
    }
}

pub const DEFAULT_MAX_CHUNK_CHARS: usize = 2000;

const TERMINATORS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 6] = ['"', '\'', ')', ']', '’', '”'];

/// Byte spans of sentences in `text`, excluding surrounding whitespace.
/// A sentence ends after a run of `.`, `!` or `?` (plus closing quotes or
/// brackets) that is followed by whitespace or the end of input.
pub(crate) fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        while i < chars.len() && chars[i].1.is_whitespace() {
            i += 1;
        }
        if i == chars.len() {
            break;
        }
        let start = chars[i].0;
        let mut end = text.len();
        while i < chars.len() {
            if TERMINATORS.contains(&chars[i].1) {
                let mut j = i + 1;
                while j < chars.len() && (TERMINATORS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
                    j += 1;
                }
                if j == chars.len() || chars[j].1.is_whitespace() {
                    end = chars.get(j).map_or(text.len(), |c| c.0);
                    i = j;
                    break;
                }
                i = j;
            } else {
                i += 1;
            }
        }
        let end = start + text[start..end].trim_end().len();
        spans.push((start, end));
    }
    spans
}

/// Splits an over-long span at the last whitespace inside each window of
/// `max` characters, or hard at `max` characters when a window has none.
fn split_long(text: &str, (start, end): (usize, usize), max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cur = start;
    while cur < end {
        let rest = &text[cur..end];
        let mut indices = rest.char_indices();
        let Some((cut, _)) = indices.nth(max) else {
            out.push((cur, end));
            break;
        };
        // Whitespace at char position `max` is allowed as a break point.
        let window = &rest[..cut + rest[cut..].chars().next().map_or(0, char::len_utf8)];
        let piece_end = match window.char_indices().rev().find(|(_, c)| c.is_whitespace()) {
            Some((ws, _)) if !rest[..ws].trim().is_empty() => cur + rest[..ws].trim_end().len(),
            _ => cur + cut,
        };
        out.push((cur, piece_end));
        cur = piece_end + text[piece_end..end].len() - text[piece_end..end].trim_start().len();
    }
    out
}

/// Splits `text` into chunks of at most `max_chunk_chars` characters,
/// preferring sentence boundaries. Chunks are exact slices of `text`; only
/// whitespace between chunks is dropped.
pub fn chunk_document(source_id: &str, text: &str, max_chunk_chars: usize) -> Vec<TextChunk> {
    let max = max_chunk_chars.max(1);
    let pieces: Vec<(usize, usize)> = sentence_spans(text)
        .into_iter()
        .flat_map(|span| {
            if text[span.0..span.1].chars().count() <= max {
                vec![span]
            } else {
                split_long(text, span, max)
            }
        })
        .collect();

    let mut chunks = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for (start, end) in pieces {
        current = match current {
            Some((cs, _)) if text[cs..end].chars().count() <= max => Some((cs, end)),
            Some(done) => {
                chunks.push(done);
                Some((start, end))
            }
            None => Some((start, end)),
        };
    }
    chunks.extend(current);

    chunks
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| TextChunk {
            source_id: source_id.to_string(),
            chunk_index: index,
            text: text[start..end].to_string(),
            offset: start,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rebuilds the document from chunk offsets and checks that everything
    /// outside the chunks is whitespace.
    fn reconstructs(text: &str, chunks: &[TextChunk], max: usize) -> bool {
        let mut cursor = 0;
        for (i, c) in chunks.iter().enumerate() {
            if c.chunk_index != i || c.offset < cursor {
                return false;
            }
            if !text[cursor..c.offset].trim().is_empty() {
                return false;
            }
            if text[c.offset..c.offset + c.text.len()] != c.text {
                return false;
            }
            if c.text.trim().is_empty() || c.text.trim() != c.text || c.text.chars().count() > max {
                return false;
            }
            cursor = c.offset + c.text.len();
        }
        text[cursor..].trim().is_empty()
    }

    #[test]
    fn short_text_is_one_chunk() {
        let text = "Marie Curie discovered radium in 1898. She won a Nobel Prize. Paris is a city.";
        let chunks = chunk_document("d", text, 10_000);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].chunk_index, 0);
        assert_eq!(chunks[0].text, text);
    }

    #[test]
    fn empty_text_has_no_chunks() {
        assert!(chunk_document("d", "", 100).is_empty());
        assert!(chunk_document("d", "   \n ", 100).is_empty());
    }

    #[test]
    fn five_sentences_two_chunks() {
        let text = "Alpha one. Beta two. Gamma three. Delta four. Epsilon five.";
        let chunks = chunk_document("d", text, 35);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].text, "Alpha one. Beta two. Gamma three.");
        assert_eq!(chunks[1].text, "Delta four. Epsilon five.");
        assert!(reconstructs(text, &chunks, 35));
        let joined = chunks.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
        assert_eq!(joined, text);
    }

    #[test]
    fn long_sentence_is_split_at_whitespace() {
        let text = "one two three four five six seven eight nine ten";
        let chunks = chunk_document("d", text, 12);
        assert!(reconstructs(text, &chunks, 12));
        assert!(chunks.iter().all(|c| !c.text.starts_with(' ')));
        assert_eq!(chunks[0].text, "one two");
    }

    #[test]
    fn unbroken_run_is_hard_split() {
        let text = "abcdefghijklmnopqrstuvwxyz";
        let chunks = chunk_document("d", text, 10);
        let texts: Vec<_> = chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["abcdefghij", "klmnopqrst", "uvwxyz"]);
    }

    #[test]
    fn decimals_and_abbreviation_dots_do_not_split() {
        let spans = sentence_spans("Pi is 3.14 roughly. Next one!");
        assert_eq!(spans.len(), 2);
    }

    #[test]
    fn multibyte_text_respects_char_limit() {
        let text = "Gödel émigré ünd Curie. Über alles schön. Ça va très bien.";
        for max in 1..30 {
            let chunks = chunk_document("d", text, max);
            assert!(reconstructs(text, &chunks, max), "max {max}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn chunks_reconstruct_input(
                text in "[a-zé .!?\n]{0,200}",
                max in 1usize..60,
            ) {
                let chunks = chunk_document("doc", &text, max);
                prop_assert!(reconstructs(&text, &chunks, max));
            }
        }
    }
}
