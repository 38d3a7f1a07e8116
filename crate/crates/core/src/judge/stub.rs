use super::verdict::{parse_verdict, Verdict};
use crate::Label;

/// Terms the offline stub treats as religious.
pub const STUB_TERMS: &[&str] = &[
    "bless", "blessed", "blessing", "blessings", "church", "churches", "divine", "faith", "god", "gods", "holy",
    "pray", "prayed", "prayer", "prayers", "praying", "prays", "sacred", "spiritual", "worship",
];

pub const STUB_CERTAINTY: u8 = 90;

/// Deterministic stand-in for a model: the schema response it would return.
pub fn stub_response(text: &str) -> String {
    let lower = text.to_lowercase();
    let hit = lower.split(|c: char| !c.is_alphanumeric()).find(|w| STUB_TERMS.contains(w));
    let (answer, why) = match hit {
        Some(term) => ("Yes", format!("Contains the term '{term}'.")),
        None => ("No", "No religious term found.".to_string()),
    };
    serde_json::json!({
        "Religious": answer,
        "Certainty": format!("{STUB_CERTAINTY}%"),
        "Argumentation": why,
    })
    .to_string()
}

pub fn stub_verdict(sentence_id: &str, model_id: &str, text: &str) -> Verdict {
    let v = parse_verdict(sentence_id, model_id, &stub_response(text));
    debug_assert_ne!(v.label, Label::Malformed);
    v
}
