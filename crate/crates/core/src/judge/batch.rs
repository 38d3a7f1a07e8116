use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::SentenceRecord;

pub const CHAT_COMPLETIONS: &str = "/v1/chat/completions";

/// One sentence to classify under a given system prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRequest {
    pub sentence_id: String,
    pub model_id: String,
    pub system_prompt: String,
    pub user_text: String,
}

/// Request-line schema of the target batch service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchFormat {
    OpenAi,
    Groq,
}

impl BatchFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            BatchFormat::OpenAi => "openai",
            BatchFormat::Groq => "groq",
        }
    }
}

impl fmt::Display for BatchFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BatchFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openai" | "openai-batch" => Ok(BatchFormat::OpenAi),
            "groq" | "groq-batch" => Ok(BatchFormat::Groq),
            other => Err(format!("unknown batch format `{other}`")),
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct Body<'a> {
    model: &'a str,
    messages: [Message<'a>; 2],
}

#[derive(Serialize)]
struct RequestLine<'a> {
    custom_id: &'a str,
    method: &'a str,
    url: &'a str,
    body: Body<'a>,
}

impl ClassificationRequest {
    pub fn to_line(&self, format: BatchFormat) -> String {
        let body = Body {
            model: &self.model_id,
            messages: [
                Message { role: "system", content: &self.system_prompt },
                Message { role: "user", content: &self.user_text },
            ],
        };
        // Groq's batch endpoint takes the OpenAI envelope unchanged.
        let line = match format {
            BatchFormat::OpenAi | BatchFormat::Groq => serde_json::to_string(&RequestLine {
                custom_id: &self.sentence_id,
                method: "POST",
                url: CHAT_COMPLETIONS,
                body,
            }),
        };
        line.expect("request serializes")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchFile {
    pub requests: Vec<ClassificationRequest>,
    pub skipped_empty: usize,
}

impl BatchFile {
    pub fn lines(&self, format: BatchFormat) -> Vec<String> {
        self.requests.iter().map(|r| r.to_line(format)).collect()
    }

    /// JSONL body, one request per line, newline-terminated.
    pub fn to_jsonl(&self, format: BatchFormat) -> String {
        let mut out = String::new();
        for line in self.lines(format) {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Requests for every non-empty sentence, ordered by (ngo_id, doc_id, position).
pub fn build_batch_file(corpus: &[SentenceRecord], system_text: &str, model_id: &str) -> BatchFile {
    let mut sorted: Vec<&SentenceRecord> = corpus.iter().collect();
    sorted.sort_by(|a, b| (&a.ngo_id, &a.doc_id, a.position).cmp(&(&b.ngo_id, &b.doc_id, b.position)));
    let mut file = BatchFile::default();
    for rec in sorted {
        if rec.text.trim().is_empty() {
            file.skipped_empty += 1;
            continue;
        }
        file.requests.push(ClassificationRequest {
            sentence_id: rec.sentence_id.clone(),
            model_id: model_id.to_string(),
            system_prompt: system_text.to_string(),
            user_text: rec.text.clone(),
        });
    }
    file
}
