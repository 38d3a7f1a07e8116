use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::LabelMatrix;
use super::stats::LabelCounts;
use crate::lexicon::{compile_matcher, fold, match_sentence, Lexicon, LexiconNode};
use crate::text::normalize_whitespace;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCounts {
    pub classifier: String,
    pub counts: LabelCounts,
    pub pct_yes: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSample {
    pub sentence_id: String,
    pub ngo_id: String,
    pub text: String,
    /// Tree first, then one per model.
    pub labels: Vec<Label>,
    pub argumentation: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub phrase: String,
    pub n_sentences: usize,
    pub per_classifier: Vec<ClassifierCounts>,
    pub samples: Vec<TermSample>,
}

/// Sentences containing `phrase` (case-insensitive, whitespace-normalized,
/// word-bounded) and how each classifier labelled them. Keeps the first
/// `max_samples` rows as samples.
pub fn term_report(matrix: &LabelMatrix, phrase: &str, max_samples: usize) -> TermReport {
    let folded = fold(phrase);
    let mut node = LexiconNode::new("phrase");
    node.variants = vec![folded.clone()];
    let matcher = compile_matcher(&Lexicon { roots: vec![node], exclusions: Vec::new() });

    let classifiers = matrix.classifiers();
    let mut counts = vec![LabelCounts::default(); classifiers.len()];
    let mut samples = Vec::new();
    let mut n = 0;
    for row in &matrix.rows {
        if folded.is_empty() || match_sentence(&matcher, &row.sentence_id, &row.text).match_count == 0 {
            continue;
        }
        n += 1;
        for (c, slot) in counts.iter_mut().enumerate() {
            slot.add(row.label(c));
        }
        if samples.len() < max_samples {
            samples.push(TermSample {
                sentence_id: row.sentence_id.clone(),
                ngo_id: row.ngo_id.clone(),
                text: row.text.clone(),
                labels: (0..classifiers.len()).map(|c| row.label(c)).collect(),
                argumentation: row.argumentation.clone(),
            });
        }
    }
    TermReport {
        phrase: folded,
        n_sentences: n,
        per_classifier: classifiers
            .into_iter()
            .zip(counts)
            .map(|(classifier, counts)| ClassifierCounts { classifier, pct_yes: counts.pct_yes(), counts })
            .collect(),
        samples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSplit {
    pub classifier: String,
    pub counts: LabelCounts,
    /// Share of the most frequent valid label among valid labels; `None`
    /// when every label is malformed.
    pub consistency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub text: String,
    pub n_occurrences: usize,
    pub ngo_ids: Vec<String>,
    pub splits: Vec<LabelSplit>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub groups: Vec<DuplicateGroup>,
}

/// Groups rows by whitespace-normalized text (case kept) and reports label
/// splits for texts seen at least twice, most frequent first.
pub fn duplicate_consistency(matrix: &LabelMatrix) -> ConsistencyReport {
    let mut by_text: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, row) in matrix.rows.iter().enumerate() {
        by_text.entry(normalize_whitespace(&row.text)).or_default().push(i);
    }
    let classifiers = matrix.classifiers();
    let mut groups: Vec<DuplicateGroup> = by_text
        .into_iter()
        .filter(|(_, idx)| idx.len() >= 2)
        .map(|(text, idx)| {
            let mut ngo_ids: Vec<String> = idx.iter().map(|&i| matrix.rows[i].ngo_id.clone()).collect();
            ngo_ids.sort();
            ngo_ids.dedup();
            let splits = classifiers
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let mut counts = LabelCounts::default();
                    for &i in &idx {
                        counts.add(matrix.rows[i].label(c));
                    }
                    let valid = counts.n_yes + counts.n_no;
                    let consistency = (valid > 0).then(|| counts.n_yes.max(counts.n_no) as f64 / valid as f64);
                    LabelSplit { classifier: name.clone(), counts, consistency }
                })
                .collect();
            DuplicateGroup { text, n_occurrences: idx.len(), ngo_ids, splits }
        })
        .collect();
    groups.sort_by(|a, b| b.n_occurrences.cmp(&a.n_occurrences).then_with(|| a.text.cmp(&b.text)));
    ConsistencyReport { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::matrix::MatrixRow;
    use crate::harvest::Group;

    fn matrix(rows: Vec<(&str, Label, Label)>) -> LabelMatrix {
        LabelMatrix {
            model_ids: vec!["llama".into()],
            sources: vec![("a".into(), Group::Secular)],
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (text, t, l))| MatrixRow {
                    sentence_id: i.to_string(),
                    doc_id: format!("d{i}"),
                    ngo_id: "a".into(),
                    group: Group::Secular,
                    text: text.into(),
                    text_hash: String::new(),
                    tree: t,
                    models: vec![l],
                    argumentation: vec![Some(format!("why {i}"))],
                })
                .collect(),
        }
    }

    #[test]
    fn term_counts_and_samples() {
        let m = matrix(vec![
            ("We honor Mother  Earth.", Label::Yes, Label::Yes),
            ("MOTHER EARTH weeps", Label::Yes, Label::No),
            ("Grandmother earthly things", Label::No, Label::No),
            ("The sacred earth.", Label::Yes, Label::Yes),
        ]);
        let r = term_report(&m, "Mother Earth", 1);
        assert_eq!(r.phrase, "mother earth");
        assert_eq!(r.n_sentences, 2);
        assert_eq!(r.per_classifier[1].counts.n_yes, 1);
        assert_eq!(r.per_classifier[1].pct_yes, 50.0);
        assert_eq!(r.samples.len(), 1);
        assert_eq!(r.samples[0].argumentation[0].as_deref(), Some("why 0"));

        let none = term_report(&m, "pachamama", 5);
        assert_eq!(none.n_sentences, 0);
        assert!(none.samples.is_empty());
    }

    #[test]
    fn consistency_split() {
        let mut rows = Vec::new();
        for i in 0..12 {
            rows.push(("Protect our common home.", Label::No, if i < 7 { Label::Yes } else { Label::No }));
        }
        for _ in 0..5 {
            rows.push(("Pray  for rain.", Label::Yes, Label::Yes));
        }
        rows.push(("pray for rain.", Label::Yes, Label::Yes));
        rows.push(("Unique.", Label::No, Label::No));
        let r = duplicate_consistency(&matrix(rows));
        assert_eq!(r.groups.len(), 2);
        assert_eq!(r.groups[0].n_occurrences, 12);
        assert!((r.groups[0].splits[1].consistency.unwrap() - 7.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.groups[1].text, "Pray for rain.");
        assert_eq!(r.groups[1].n_occurrences, 5);
        assert_eq!(r.groups[1].splits[1].consistency, Some(1.0));
    }

    #[test]
    fn no_duplicates() {
        let r = duplicate_consistency(&matrix(vec![("a", Label::No, Label::No), ("b", Label::No, Label::No)]));
        assert!(r.groups.is_empty());
    }
}
