use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::segment_sentences;
use crate::harvest::Group;
use crate::hash::sha256_parts;

/// Main-content text of one document plus its detected language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub doc_id: String,
    pub ngo_id: String,
    pub text: String,
    pub lang: String,
    pub lang_confidence: f64,
}

/// One corpus unit. Identical texts in different documents stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sentence_id: String,
    pub doc_id: String,
    pub ngo_id: String,
    pub position: usize,
    pub text: String,
}

pub fn sentence_id(doc_id: &str, position: usize, text: &str) -> String {
    let pos = position.to_string();
    let mut h = sha256_parts([doc_id.as_bytes(), pos.as_bytes(), text.as_bytes()]);
    h.truncate(24);
    h
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    /// Non-English documents dropped, per NGO.
    pub dropped: BTreeMap<String, usize>,
    pub kept: BTreeMap<String, usize>,
}

/// Keeps English documents and documents whose language is uncertain
/// (confidence ≤ 0.5); drops confidently non-English ones.
pub fn filter_corpus(docs: Vec<CleanDocument>) -> (Vec<CleanDocument>, FilterReport) {
    let mut report = FilterReport::default();
    let kept = docs
        .into_iter()
        .filter(|d| {
            let keep = d.lang == "en" || d.lang_confidence <= 0.5;
            let slot = if keep { &mut report.kept } else { &mut report.dropped };
            *slot.entry(d.ngo_id.clone()).or_insert(0) += 1;
            keep
        })
        .collect();
    (kept, report)
}

/// Splits every document into sentences, ordered by (ngo_id, doc_id, position).
pub fn build_sentence_corpus(docs: &[CleanDocument]) -> Vec<SentenceRecord> {
    let mut records: Vec<SentenceRecord> = docs
        .iter()
        .flat_map(|doc| {
            segment_sentences(&doc.text)
                .into_iter()
                .enumerate()
                .map(move |(position, text)| SentenceRecord {
                    sentence_id: sentence_id(&doc.doc_id, position, &text),
                    doc_id: doc.doc_id.clone(),
                    ngo_id: doc.ngo_id.clone(),
                    position,
                    text,
                })
        })
        .collect();
    records.sort_by(|a, b| (&a.ngo_id, &a.doc_id, a.position).cmp(&(&b.ngo_id, &b.doc_id, b.position)));
    records
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgoCounts {
    pub n_documents: usize,
    pub n_sentences: usize,
}

impl std::ops::Add for NgoCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { n_documents: self.n_documents + o.n_documents, n_sentences: self.n_sentences + o.n_sentences }
    }
}

/// Per-NGO document and sentence counts; merging is associative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub per_ngo: BTreeMap<String, NgoCounts>,
}

impl CorpusSummary {
    pub fn from_corpus(docs: &[CleanDocument], records: &[SentenceRecord]) -> Self {
        let mut s = Self::default();
        for d in docs {
            s.per_ngo.entry(d.ngo_id.clone()).or_default().n_documents += 1;
        }
        for r in records {
            s.per_ngo.entry(r.ngo_id.clone()).or_default().n_sentences += 1;
        }
        s
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.per_ngo {
            let e = self.per_ngo.entry(k).or_default();
            *e = *e + v;
        }
        self
    }

    /// `ngo_id,group,n_documents,n_sentences` rows in NGO order.
    pub fn to_csv(&self, group_of: impl Fn(&str) -> Option<Group>) -> String {
        let mut out = String::from("ngo_id,group,n_documents,n_sentences\n");
        for (ngo, c) in &self.per_ngo {
            let group = group_of(ngo).map_or("", Group::as_str);
            out.push_str(&format!("{ngo},{group},{},{}\n", c.n_documents, c.n_sentences));
        }
        out
    }
}
