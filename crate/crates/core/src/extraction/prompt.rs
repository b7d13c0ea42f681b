use super::TextChunk;
use crate::client::ChatMessage;

const CONTEXT_INSTRUCTIONS: &str = "\
You extract knowledge graph triples from text.
Output one triple per line in exactly this form:
(subject | predicate | object) {key=value; key=value}
Rules:
- subject and object are short noun phrases naming entities; predicate is a short verb phrase.
- After each triple, give the context the text states for that relation inside braces: temporal (year, date), spatial (place, location) and attributive (role, occupation, quantity) details. Omit the braces when the text gives no context.
- Never use the characters |, { or } inside a field.
- Output only triple lines, with no numbering, headings or commentary.
Example:
Text: Marie Curie discovered radium in 1898.
(Marie Curie | discovered | radium) {year=1898}";

const PLAIN_INSTRUCTIONS: &str = "\
You extract knowledge graph triples from text.
Output one triple per line in exactly this form:
(subject | predicate | object)
Rules:
- subject and object are short noun phrases naming entities; predicate is a short verb phrase.
- Never use the characters |, { or } inside a field.
- Output only triple lines, with no numbering, headings or commentary.
Example:
Text: Marie Curie discovered radium.
(Marie Curie | discovered | radium)";

fn instructions(include_context: bool) -> &'static str {
    if include_context {
        CONTEXT_INSTRUCTIONS
    } else {
        PLAIN_INSTRUCTIONS
    }
}

fn user_text(chunk: &TextChunk) -> String {
    format!("Text: {}", chunk.text.trim())
}

/// System and user messages asking for triples from `chunk`. With
/// `include_context` the requested grammar carries a `{key=value}` clause.
pub fn build_extraction_prompt(chunk: &TextChunk, include_context: bool) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(instructions(include_context)),
        ChatMessage::user(user_text(chunk)),
    ]
}

/// Follow-up conversation asking the model to rewrite `malformed` output in
/// the required grammar.
pub fn build_repair_prompt(chunk: &TextChunk, include_context: bool, malformed: &str) -> Vec<ChatMessage> {
    let form = if include_context {
        "(subject | predicate | object) {key=value; key=value}"
    } else {
        "(subject | predicate | object)"
    };
    vec![
        ChatMessage::system(instructions(include_context)),
        ChatMessage::user(user_text(chunk)),
        ChatMessage::assistant(malformed),
        ChatMessage::user(format!(
            "Your answer did not follow the required format. Rewrite the same facts using only lines of the form\n{form}\nand nothing else."
        )),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::Role;

    fn curie() -> TextChunk {
        TextChunk::new("doc", 0, "Marie Curie discovered radium in 1898")
    }

    #[test]
    fn context_prompt_demands_braces() {
        let msgs = build_extraction_prompt(&curie(), true);
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, Role::System);
        assert!(msgs[0].content.contains("(subject | predicate | object) {key=value; key=value}"));
        assert!(msgs[0].content.contains("(Marie Curie | discovered | radium) {year=1898}"));
        assert!(msgs[1].content.ends_with("Marie Curie discovered radium in 1898"));
    }

    #[test]
    fn plain_prompt_has_no_context_clause() {
        let msgs = build_extraction_prompt(&curie(), false);
        assert!(!msgs[0].content.lines().any(|l| l.contains(") {")));
        assert!(!msgs[0].content.contains("key=value"));
    }

    #[test]
    fn prompts_are_deterministic() {
        assert_eq!(build_extraction_prompt(&curie(), true), build_extraction_prompt(&curie(), true));
    }

    #[test]
    fn repair_prompt_ends_with_user() {
        let msgs = build_repair_prompt(&curie(), true, "garbage");
        assert_eq!(msgs.last().unwrap().role, Role::User);
        assert_eq!(msgs[2].content, "garbage");
    }
}
