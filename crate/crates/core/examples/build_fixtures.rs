//! Builds a mock-client fixtures file from readable responses.
//!
//! ```text
//! cargo run -p lightkg-core --example build_fixtures -- responses.json corpus.jsonl [--no-context] > fixtures.json
//! ```
//!
//! `responses.json` maps `"<doc id>#<chunk index>"` to
//! `{"response": "...", "repair": "..."}` (`repair` optional). The output
//! maps prompt hashes to response text, as the `fixture` extractor expects.

use std::collections::BTreeMap;
use std::path::Path;

use lightkg_core::client::prompt_hash;
use lightkg_core::extraction::{build_extraction_prompt, build_repair_prompt, chunk_document, DEFAULT_MAX_CHUNK_CHARS};
use lightkg_core::pipeline::read_corpus;
use serde::Deserialize;

#[derive(Deserialize)]
struct Recorded {
    response: String,
    repair: Option<String>,
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: build_fixtures <responses.json> <corpus.jsonl> [--no-context]");
        std::process::exit(1);
    }
    let include_context = !args.iter().any(|a| a == "--no-context");
    let responses: BTreeMap<String, Recorded> =
        serde_json::from_str(&std::fs::read_to_string(&args[0]).expect("read responses")).expect("parse responses");
    let docs = read_corpus(Path::new(&args[1])).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });

    let mut fixtures = BTreeMap::new();
    for doc in &docs {
        for chunk in chunk_document(&doc.id, &doc.text, DEFAULT_MAX_CHUNK_CHARS) {
            let key = format!("{}#{}", chunk.source_id, chunk.chunk_index);
            let Some(rec) = responses.get(&key) else {
                eprintln!("warning: no response recorded for {key}");
                continue;
            };
            let prompt = build_extraction_prompt(&chunk, include_context);
            fixtures.insert(prompt_hash(&prompt), rec.response.clone());
            if let Some(repair) = &rec.repair {
                let prompt = build_repair_prompt(&chunk, include_context, &rec.response);
                fixtures.insert(prompt_hash(&prompt), repair.clone());
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&fixtures).expect("serialize"));
}
