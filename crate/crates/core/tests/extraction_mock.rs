use lightkg_core::aggregation::{aggregate, NormalizationPolicy};
use lightkg_core::client::{CompletionParams, MockClient};
use lightkg_core::extraction::{build_extraction_prompt, build_repair_prompt, extract_chunk, TextChunk};
use lightkg_core::Graph;

fn chunk() -> TextChunk {
    TextChunk::new("doc-1", 0, "Marie Curie discovered radium in 1898. Pierre Curie married Marie Curie.")
}

#[test]
fn garbage_lines_are_rejected_and_valid_lines_aggregate() {
    let chunk = chunk();
    let response = "(Marie Curie | discovered | radium) {year=1898}\n\
                    this line is not a triple\n\
                    (Pierre Curie | married | Marie Curie)\n";
    let client = MockClient::default().with_response(&build_extraction_prompt(&chunk, true), response);
    let result = extract_chunk(&chunk, &client, &CompletionParams::default(), true).unwrap();
    assert_eq!(result.triples.len(), 2);
    assert_eq!(result.rejected_lines.len(), 1);
    assert!(!result.repaired);
    assert_eq!(client.calls(), 1);

    let g: Graph = aggregate(&[result], &NormalizationPolicy::default()).graph;
    assert_eq!(g.node_ids().collect::<Vec<_>>(), ["marie curie", "pierre curie", "radium"]);
    let discovered = g.find_edge("marie curie", "discovered", "radium").unwrap();
    assert!(discovered.context.contains("year", "1898"));
    assert!(g.find_edge("pierre curie", "married", "marie curie").unwrap().context.is_empty());
}

#[test]
fn unparseable_answer_triggers_one_repair() {
    let chunk = chunk();
    let first = "Sure! Marie Curie discovered radium.";
    let client = MockClient::default()
        .with_response(&build_extraction_prompt(&chunk, true), first)
        .with_response(
            &build_repair_prompt(&chunk, true, first),
            "(Marie Curie | discovered | radium) {year=1898}",
        );
    let result = extract_chunk(&chunk, &client, &CompletionParams::default(), true).unwrap();
    assert!(result.repaired);
    assert_eq!(result.triples.len(), 1);
    assert_eq!(client.calls(), 2);
}

#[test]
fn context_is_dropped_when_disabled() {
    let chunk = chunk();
    let client = MockClient::default().with_response(
        &build_extraction_prompt(&chunk, false),
        "(Marie Curie | discovered | radium) {year=1898}",
    );
    let result = extract_chunk(&chunk, &client, &CompletionParams::default(), false).unwrap();
    assert_eq!(result.triples.len(), 1);
    assert!(result.triples[0].context.is_empty());
}

#[test]
fn missing_fixture_is_an_error() {
    let client = MockClient::default();
    assert!(extract_chunk(&chunk(), &client, &CompletionParams::default(), true).is_err());
}
