//! Prompt templates, batch request files, providers and verdict parsing.

mod batch;
mod prompt;
mod provider;
mod stub;
mod verdict;

use thiserror::Error;

pub use batch::{build_batch_file, BatchFile, BatchFormat, ClassificationRequest, CHAT_COMPLETIONS};
pub use prompt::{render_prompt, PromptTemplate, TemplateId, GENERAL_SHA256, REVISED_SHA256};
pub use provider::{
    BatchProvider, BatchResults, HttpBatchProvider, JobState, ProviderError, ProviderKind, ResultEntry, StubProvider,
};
pub use stub::{stub_response, stub_verdict, STUB_CERTAINTY, STUB_TERMS};
pub use verdict::{parse_verdict, parse_verdict_with, Verdict};

use crate::text::SentenceRecord;
use crate::Label;

pub const MISSING: &str = "<missing>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JudgeError {
    #[error("unknown prompt template `{0}` (expected general or revised)")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassifyOutcome {
    /// One verdict per corpus sentence, ordered by (ngo_id, doc_id, position).
    pub verdicts: Vec<Verdict>,
    pub results: BatchResults,
    pub missing: usize,
    pub malformed: usize,
    pub skipped_empty: usize,
}

/// Sends the corpus through `provider` and parses every answer. Sentences
/// without a usable result become malformed verdicts; only run-level
/// provider failures are errors.
pub fn classify(
    corpus: &[SentenceRecord],
    system_text: &str,
    model_id: &str,
    provider: &dyn BatchProvider,
    job: &str,
    strict_json: bool,
) -> Result<ClassifyOutcome, ProviderError> {
    let batch = build_batch_file(corpus, system_text, model_id);
    let results = if batch.requests.is_empty() { BatchResults::default() } else { provider.run(&batch, job)? };

    let mut sorted: Vec<&SentenceRecord> = corpus.iter().collect();
    sorted.sort_by(|a, b| (&a.ngo_id, &a.doc_id, a.position).cmp(&(&b.ngo_id, &b.doc_id, b.position)));
    let mut out = ClassifyOutcome { skipped_empty: batch.skipped_empty, ..Default::default() };
    for rec in sorted {
        let v = match results.entries.get(&rec.sentence_id) {
            Some(ResultEntry::Content(c)) => parse_verdict_with(&rec.sentence_id, model_id, c, strict_json),
            Some(ResultEntry::Error(e)) => Verdict::malformed(&rec.sentence_id, model_id, e),
            None => {
                out.missing += 1;
                Verdict::malformed(&rec.sentence_id, model_id, MISSING)
            }
        };
        if v.label == Label::Malformed {
            out.malformed += 1;
        }
        out.verdicts.push(v);
    }
    out.results = results;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::sentence_id;

    struct Dropping(usize);

    impl BatchProvider for Dropping {
        fn kind(&self) -> ProviderKind {
            ProviderKind::Stub
        }

        fn run(&self, batch: &BatchFile, job: &str) -> Result<BatchResults, ProviderError> {
            let mut r = StubProvider.run(batch, job)?;
            for req in batch.requests.iter().take(self.0) {
                r.entries.remove(&req.sentence_id);
            }
            Ok(r)
        }
    }

    fn corpus(n: usize) -> Vec<SentenceRecord> {
        (0..n)
            .map(|i| {
                let text = if i % 2 == 0 { format!("We pray {i}.") } else { format!("Tuna {i}.") };
                SentenceRecord { sentence_id: sentence_id("d", i, &text), doc_id: "d".into(), ngo_id: "n".into(), position: i, text }
            })
            .collect()
    }

    #[test]
    fn stub_end_to_end() {
        let c = corpus(6);
        let out = classify(&c, render_prompt("revised").unwrap(), "stub", &StubProvider, "j", false).unwrap();
        assert_eq!(out.verdicts.len(), 6);
        assert_eq!(out.malformed, 0);
        let yes = out.verdicts.iter().filter(|v| v.label == Label::Yes).count();
        assert_eq!(yes, 3);
    }

    #[test]
    fn missing_results_stay_total() {
        let c = corpus(10);
        let out = classify(&c, "SYS", "m", &Dropping(2), "j", false).unwrap();
        assert_eq!(out.verdicts.len(), 10);
        assert_eq!(out.missing, 2);
        let missing: Vec<_> = out.verdicts.iter().filter(|v| v.raw_text == MISSING).collect();
        assert_eq!(missing.len(), 2);
        assert!(missing.iter().all(|v| v.label == Label::Malformed));
    }

    #[test]
    fn empty_corpus() {
        let out = classify(&[], "SYS", "m", &StubProvider, "j", false).unwrap();
        assert!(out.verdicts.is_empty());
    }
}
