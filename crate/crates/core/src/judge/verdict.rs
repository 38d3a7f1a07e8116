use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Label;

/// Parsed model judgement for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub sentence_id: String,
    pub model_id: String,
    pub label: Label,
    pub certainty: Option<u8>,
    pub argumentation: Option<String>,
    pub raw_text: String,
}

impl Verdict {
    pub fn malformed(sentence_id: &str, model_id: &str, raw_text: &str) -> Self {
        Self {
            sentence_id: sentence_id.to_string(),
            model_id: model_id.to_string(),
            label: Label::Malformed,
            certainty: None,
            argumentation: None,
            raw_text: raw_text.to_string(),
        }
    }

    /// Renders the response schema the prompts ask for. `None` for
    /// malformed verdicts.
    pub fn to_schema_string(&self) -> Option<String> {
        let answer = match self.label {
            Label::Yes => "Yes",
            Label::No => "No",
            Label::Malformed => return None,
        };
        let mut obj = Map::new();
        obj.insert("Religious".into(), Value::from(answer));
        obj.insert("Certainty".into(), Value::from(format!("{}%", self.certainty?)));
        obj.insert("Argumentation".into(), Value::from(self.argumentation.clone()?));
        Some(Value::Object(obj).to_string())
    }
}

/// Lenient parse: the first balanced `{...}` block anywhere in the text.
pub fn parse_verdict(sentence_id: &str, model_id: &str, raw_text: &str) -> Verdict {
    parse_verdict_with(sentence_id, model_id, raw_text, false)
}

/// With `strict`, the whole trimmed message must be the JSON object.
pub fn parse_verdict_with(sentence_id: &str, model_id: &str, raw_text: &str, strict: bool) -> Verdict {
    let block = if strict { Some(raw_text.trim()) } else { first_balanced_object(raw_text) };
    let parsed = block
        .and_then(|b| serde_json::from_str::<Value>(b).ok())
        .and_then(|v| match v {
            Value::Object(m) => fields(&m),
            _ => None,
        });
    match parsed {
        Some((label, certainty, argumentation)) => Verdict {
            sentence_id: sentence_id.to_string(),
            model_id: model_id.to_string(),
            label,
            certainty: Some(certainty),
            argumentation: Some(argumentation),
            raw_text: raw_text.to_string(),
        },
        None => Verdict::malformed(sentence_id, model_id, raw_text),
    }
}

fn lookup<'a>(m: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    m.get(key).or_else(|| m.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case(key)).map(|(_, v)| v))
}

fn fields(m: &Map<String, Value>) -> Option<(Label, u8, String)> {
    let label = match lookup(m, "Religious")?.as_str()?.trim().to_ascii_lowercase().as_str() {
        "yes" => Label::Yes,
        "no" => Label::No,
        _ => return None,
    };
    let certainty = certainty(lookup(m, "Certainty")?)?;
    let argumentation = lookup(m, "Argumentation")?.as_str()?.to_string();
    Some((label, certainty, argumentation))
}

fn certainty(v: &Value) -> Option<u8> {
    let n = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => {
            let s = s.trim();
            let s = s.strip_suffix('%').unwrap_or(s).trim_end();
            s.parse::<f64>().ok()?
        }
        _ => return None,
    };
    if !n.is_finite() {
        return None;
    }
    Some(n.round().clamp(0.0, 100.0) as u8)
}

/// Finds the first `{` that opens a brace-balanced block, treating braces
/// inside JSON strings as text.
fn first_balanced_object(s: &str) -> Option<&str> {
    let bytes = s.as_bytes();
    let mut from = 0;
    while let Some(off) = s[from..].find('{') {
        let start = from + off;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&s[start..=i]);
                    }
                }
                _ => {}
            }
        }
        from = start + 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(raw: &str) -> Verdict {
        parse_verdict("s", "m", raw)
    }

    #[test]
    fn schema_example() {
        let v = p(r#"{"Religious":"Yes","Certainty":"100%","Argumentation":"Invokes the name of God"}"#);
        assert_eq!((v.label, v.certainty), (Label::Yes, Some(100)));
        assert_eq!(v.argumentation.as_deref(), Some("Invokes the name of God"));
    }

    #[test]
    fn prose_only_is_malformed() {
        let v = p("I think this sentence is about weather.");
        assert_eq!(v.label, Label::Malformed);
        assert_eq!(v.raw_text, "I think this sentence is about weather.");
        assert_eq!(v.certainty, None);
    }

    #[test]
    fn wrapped_lowercase_keys() {
        let v = p(r#"Sure, here you go: {"religious":"no","certainty":"85%","argumentation":"descriptive"}"#);
        assert_eq!((v.label, v.certainty), (Label::No, Some(85)));
    }

    #[test]
    fn label_outside_enum() {
        assert_eq!(p(r#"{"Religious":"Maybe","Certainty":"50%","Argumentation":"..."}"#).label, Label::Malformed);
    }

    #[test]
    fn certainty_forms() {
        let mk = |c: &str| p(&format!(r#"{{"Religious":"YES","Certainty":{c},"Argumentation":""}}"#)).certainty;
        assert_eq!(mk("90"), Some(90));
        assert_eq!(mk("\"90 %\""), Some(90));
        assert_eq!(mk("\"150%\""), Some(100));
        assert_eq!(mk("-3"), Some(0));
        assert_eq!(mk("87.6"), Some(88));
        assert_eq!(mk("\"high\""), None);
        assert_eq!(mk("null"), None);
    }

    #[test]
    fn braces_inside_strings_and_extra_keys() {
        let raw = r#"Note {unbalanced. {"Religious":"No","Certainty":"70%","Argumentation":"uses } and { literally","Extra":1} trailing"#;
        let v = p(raw);
        assert_eq!(v.label, Label::No);
        assert_eq!(v.argumentation.as_deref(), Some("uses } and { literally"));
    }

    #[test]
    fn first_block_wins() {
        let raw = r#"{"Religious":"No","Certainty":"60%","Argumentation":"a"} {"Religious":"Yes","Certainty":"99%","Argumentation":"b"}"#;
        assert_eq!(p(raw).label, Label::No);
        assert_eq!(p(r#"{"note": 1} {"Religious":"Yes","Certainty":"9%","Argumentation":"b"}"#).label, Label::Malformed);
    }

    #[test]
    fn strict_mode() {
        let wrapped = r#"Here: {"Religious":"Yes","Certainty":"80%","Argumentation":"x"}"#;
        assert_eq!(parse_verdict_with("s", "m", wrapped, true).label, Label::Malformed);
        let bare = "  {\"Religious\":\"Yes\",\"Certainty\":\"80%\",\"Argumentation\":\"x\"}\n";
        assert_eq!(parse_verdict_with("s", "m", bare, true).label, Label::Yes);
    }

    #[test]
    fn missing_fields_are_malformed() {
        assert_eq!(p(r#"{"Religious":"Yes","Certainty":"80%"}"#).label, Label::Malformed);
        assert_eq!(p(r#"{"Religious":"Yes","Argumentation":"x"}"#).label, Label::Malformed);
        assert_eq!(p(r#"["Religious","Yes"]"#).label, Label::Malformed);
    }

    #[test]
    fn round_trip() {
        let v = p(r#"{"Religious":"No","Certainty":"42%","Argumentation":"quote \" and {brace}"}"#);
        let again = p(&v.to_schema_string().unwrap());
        assert_eq!(Verdict { raw_text: String::new(), ..again }, Verdict { raw_text: String::new(), ..v });
        assert_eq!(Verdict::malformed("s", "m", "x").to_schema_string(), None);
    }
}
