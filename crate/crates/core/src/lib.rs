//! Core library for detecting religious language in NGO climate texts.
//!
//! The crate is organised along the pipeline:
//!
//! * [`harvest`] builds CDX index queries, derives live-URL worklists and
//!   fetches pages politely into a resumable document store.
//! * [`text`] turns raw HTML into an English, sentence-level corpus.
//! * [`lexicon`] holds the hierarchical concept tree and the word-boundary
//!   matcher used as the rule-based classifier.
//! * [`judge`] renders the fixed zero-shot prompts, writes batch request
//!   files, talks to batch providers and parses verdicts.
//! * [`analytics`] joins all labels per sentence and computes rates,
//!   agreement, disagreement ratios, phrase reports and duplicate audits.

pub mod analytics;
pub mod harvest;
pub mod hash;
pub mod judge;
pub mod label;
pub mod lexicon;
pub mod text;

pub use label::Label;
