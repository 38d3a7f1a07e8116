//! From raw HTML to an English, sentence-level corpus.

mod clean;
mod corpus;
mod entities;
mod html;
mod lang;
mod segment;

pub use clean::{clean_document, Cleaned, SkipReason};
pub use corpus::{
    build_sentence_corpus, filter_corpus, sentence_id, CleanDocument, CorpusSummary, FilterReport,
    NgoCounts, SentenceRecord,
};
pub use html::{extract_main_text, extract_main_text_with, ExtractConfig, Extraction};
pub use lang::{detect_language, LanguageGuess, MIN_EVIDENCE_CHARS, SUPPORTED_LANGUAGES};
pub use segment::{segment_sentences, ABBREVIATIONS, SPLITTER_VERSION};

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
