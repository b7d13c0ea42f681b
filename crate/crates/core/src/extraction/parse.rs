//! Parser for the line-oriented triple grammar
//! `(subject | predicate | object) {key=value; key=value}`.

use super::{ExtractionResult, RejectedLine};
use crate::graph::{ContextMap, ContextTriple, Provenance};

/// Strips list decorations small models tend to add: `- `, `* `, `• `,
/// `1. ` and `1) `.
fn strip_bullet(line: &str) -> &str {
    for marker in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(marker) {
            return rest.trim_start();
        }
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim_start();
        }
    }
    line
}

fn parse_context(body: &str) -> Result<ContextMap, String> {
    let mut ctx = ContextMap::new();
    for entry in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let (key, value) = entry
            .split_once('=')
            .or_else(|| entry.split_once(':'))
            .ok_or_else(|| format!("context entry `{entry}` has no `=`"))?;
        ctx.insert(key, value)
            .map_err(|e| format!("context entry `{entry}`: {e}"))?;
    }
    Ok(ctx)
}

/// Parses one non-blank line into `(subject, predicate, object, context)`.
pub(crate) fn parse_line(line: &str) -> Result<(String, String, String, ContextMap), String> {
    let line = strip_bullet(line.trim());
    let (head, context) = match line.split_once('{') {
        Some((head, tail)) => {
            let body = tail
                .trim_end()
                .strip_suffix('}')
                .ok_or("context clause is not closed with `}`")?;
            if body.contains(['{', '}']) {
                return Err("nested or repeated context clause".into());
            }
            (head.trim_end(), parse_context(body)?)
        }
        None => {
            if line.contains('}') {
                return Err("unbalanced `}`".into());
            }
            (line, ContextMap::new())
        }
    };
    let inner = head
        .strip_prefix('(')
        .and_then(|h| h.strip_suffix(')'))
        .ok_or("line is not of the form `(subject | predicate | object)`")?;
    let fields: Vec<&str> = inner.split('|').map(str::trim).collect();
    let [subject, predicate, object] = fields.as_slice() else {
        return Err(format!("expected 3 `|`-separated fields, found {}", fields.len()));
    };
    for (name, value) in [("subject", subject), ("predicate", predicate), ("object", object)] {
        if value.is_empty() {
            return Err(format!("empty {name}"));
        }
    }
    Ok((subject.to_string(), predicate.to_string(), object.to_string(), context))
}

/// Parses every line of a model response. Never fails: lines that do not
/// match the grammar are collected in `rejected_lines`.
pub fn parse_extraction_response(raw: &str, provenance: Provenance) -> ExtractionResult {
    let mut result = ExtractionResult::empty(&provenance.source_id, provenance.chunk_index);
    result.raw_response = raw.to_string();
    for line in raw.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match parse_line(line) {
            Ok((s, p, o, ctx)) => {
                let triple = ContextTriple::new(&s, &p, &o, ctx, provenance.clone())
                    .expect("fields checked non-empty");
                result.triples.push(triple);
            }
            Err(reason) => result.rejected_lines.push(RejectedLine {
                fragment: line.to_string(),
                reason,
            }),
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ExtractorKind;

    fn prov() -> Provenance {
        Provenance::new("doc", 4, ExtractorKind::Model)
    }

    #[test]
    fn parses_curie_line() {
        let r = parse_extraction_response("(Marie Curie | discovered | radium) {year=1898}", prov());
        assert_eq!(r.triples.len(), 1);
        let t = &r.triples[0];
        assert_eq!((t.subject.as_str(), t.predicate.as_str(), t.object.as_str()), ("Marie Curie", "discovered", "radium"));
        assert!(t.context.contains("year", "1898"));
        assert_eq!(t.context.value_count(), 1);
        assert_eq!(t.provenance, prov());
        assert!(!r.repaired);
    }

    #[test]
    fn empty_predicate_rejected() {
        let r = parse_extraction_response("(A | | B)", prov());
        assert!(r.triples.is_empty());
        assert_eq!(r.rejected_lines.len(), 1);
        assert!(r.rejected_lines[0].reason.contains("empty predicate"));
    }

    #[test]
    fn mixed_response() {
        let raw = "(Alan Turing | worked at | Bletchley Park) {Place=UK; year = 1940}\n\
                   Sure! Here are your triples:\n\
                   (Alan Turing | proposed | Turing test)\n";
        let r = parse_extraction_response(raw, prov());
        assert_eq!(r.triples.len(), 2);
        assert_eq!(r.rejected_lines.len(), 1);
        assert!(!r.repaired);
        assert!(r.triples[0].context.contains("place", "UK"));
        assert!(r.triples[0].context.contains("year", "1940"));
        assert!(r.triples[1].context.is_empty());
    }

    #[test]
    fn grammar_violations() {
        for bad in [
            "(a | b)",
            "(a | b | c | d)",
            "a | b | c",
            "(a | b | c) {year=1898",
            "(a | b | c) {year}",
            "(a | b | c) {=1898}",
            "(a | b | c) {k=v} trailing",
            "(a | b | c)}",
            "(a | b | c) {k={v}}",
        ] {
            assert!(parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lenient_decorations() {
        for ok in ["- (a | b | c)", "3. (a | b | c) {}", "(a | b | c) {k=v;}", "(a | b | c) {year: 1898}"] {
            assert!(parse_line(ok).is_ok(), "{ok}");
        }
        let (_, _, _, ctx) = parse_line("(a|b|c){year=1898; year=1899}").unwrap();
        assert_eq!(ctx.get("year").unwrap().len(), 2);
    }

    #[test]
    fn parentheses_inside_fields() {
        let (s, _, o, _) = parse_line("(DNA (molecule) | encodes | protein)").unwrap();
        assert_eq!(s, "DNA (molecule)");
        assert_eq!(o, "protein");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn every_nonblank_line_is_accounted_for(raw in "[a-z(){}|=; \n-]{0,120}") {
                let r = parse_extraction_response(&raw, prov());
                let nonblank = raw.lines().filter(|l| !l.trim().is_empty()).count();
                prop_assert_eq!(r.triples.len() + r.rejected_lines.len(), nonblank);
            }
        }
    }
}
