use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harvest::Group;
use crate::hash::sha256_hex;
use crate::judge::Verdict;
use crate::lexicon::MatchResult;
use crate::text::SentenceRecord;
use crate::Label;

pub const TREE: &str = "tree";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("{source_name} has no label for {} sentence(s): {}", .missing.len(), preview(.missing))]
    CoverageGap { source_name: String, missing: Vec<String> },
    #[error("{source_name} labels sentence {sentence_id} more than once")]
    DuplicateLabel { source_name: String, sentence_id: String },
    #[error("sentence {0} appears twice in the corpus")]
    DuplicateSentence(String),
    #[error("tree label for {0} is malformed")]
    MalformedTree(String),
    #[error("NGO `{0}` is not in the source list")]
    UnknownNgo(String),
}

fn preview(ids: &[String]) -> String {
    let mut s = ids.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > 10 {
        s.push_str(", ...");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub sentence_id: String,
    pub doc_id: String,
    pub ngo_id: String,
    pub group: Group,
    pub text: String,
    pub text_hash: String,
    pub tree: Label,
    /// One label per entry of `LabelMatrix::model_ids`.
    pub models: Vec<Label>,
    pub argumentation: Vec<Option<String>>,
}

impl MatrixRow {
    /// Label of classifier `c`: 0 is the tree, `1..` the models.
    pub fn label(&self, c: usize) -> Label {
        if c == 0 {
            self.tree
        } else {
            self.models[c - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    pub model_ids: Vec<String>,
    /// NGOs in reporting order with their group.
    pub sources: Vec<(String, Group)>,
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Ngo(String),
    SecularTotal,
    ReligiousTotal,
    Total,
}

impl Scope {
    pub fn name(&self) -> &str {
        match self {
            Scope::Ngo(id) => id,
            Scope::SecularTotal => "secular_total",
            Scope::ReligiousTotal => "religious_total",
            Scope::Total => "total",
        }
    }

    pub fn contains(&self, row: &MatrixRow) -> bool {
        match self {
            Scope::Ngo(id) => &row.ngo_id == id,
            Scope::SecularTotal => row.group == Group::Secular,
            Scope::ReligiousTotal => row.group == Group::Religious,
            Scope::Total => true,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl LabelMatrix {
    /// "tree" followed by the model ids.
    pub fn classifiers(&self) -> Vec<String> {
        std::iter::once(TREE.to_string()).chain(self.model_ids.iter().cloned()).collect()
    }

    /// Every NGO in source order, then the group totals and the grand total.
    pub fn scopes(&self) -> Vec<Scope> {
        let mut out: Vec<Scope> = self.sources.iter().map(|(id, _)| Scope::Ngo(id.clone())).collect();
        out.extend([Scope::SecularTotal, Scope::ReligiousTotal, Scope::Total]);
        out
    }

    /// Row indices per scope, empty scopes dropped with a warning.
    pub fn scope_rows(&self) -> Vec<(Scope, Vec<usize>)> {
        let mut by_ngo: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            by_ngo.entry(&r.ngo_id).or_default().push(i);
        }
        let mut out = Vec::new();
        for scope in self.scopes() {
            let idx: Vec<usize> = match &scope {
                Scope::Ngo(id) => by_ngo.get(id.as_str()).cloned().unwrap_or_default(),
                s => (0..self.rows.len()).filter(|&i| s.contains(&self.rows[i])).collect(),
            };
            if idx.is_empty() {
                log::warn!("scope {scope} has no sentences; omitted");
                continue;
            }
            out.push((scope, idx));
        }
        out
    }
}

/// Joins corpus, tree results and every model's verdicts on sentence_id.
pub fn tabulate(
    corpus: &[SentenceRecord],
    sources: &[(String, Group)],
    tree: &[MatchResult],
    verdicts: &[(String, Vec<Verdict>)],
) -> Result<LabelMatrix, AnalyticsError> {
    let groups: HashMap<&str, Group> = sources.iter().map(|(id, g)| (id.as_str(), *g)).collect();

    let tree_map = index(TREE, tree.iter().map(|r| (r.sentence_id.as_str(), r)))?;
    let model_maps = verdicts
        .iter()
        .map(|(model, vs)| index(model, vs.iter().map(|v| (v.sentence_id.as_str(), v))))
        .collect::<Result<Vec<_>, _>>()?;

    let mut seen = std::collections::HashSet::new();
    for rec in corpus {
        if !seen.insert(rec.sentence_id.as_str()) {
            return Err(AnalyticsError::DuplicateSentence(rec.sentence_id.clone()));
        }
    }
    let gap = |name: &str, has: &dyn Fn(&str) -> bool| -> Result<(), AnalyticsError> {
        let missing: Vec<String> =
            corpus.iter().filter(|r| !has(&r.sentence_id)).map(|r| r.sentence_id.clone()).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(AnalyticsError::CoverageGap { source_name: name.to_string(), missing })
        }
    };
    gap(TREE, &|id| tree_map.contains_key(id))?;
    for ((model, _), map) in verdicts.iter().zip(&model_maps) {
        gap(model, &|id| map.contains_key(id))?;
    }

    let mut rows = Vec::with_capacity(corpus.len());
    for rec in corpus {
        let group = *groups.get(rec.ngo_id.as_str()).ok_or_else(|| AnalyticsError::UnknownNgo(rec.ngo_id.clone()))?;
        let t = tree_map[rec.sentence_id.as_str()];
        if !t.label.is_valid() {
            return Err(AnalyticsError::MalformedTree(rec.sentence_id.clone()));
        }
        let picked: Vec<&Verdict> = model_maps.iter().map(|m| m[rec.sentence_id.as_str()]).collect();
        rows.push(MatrixRow {
            sentence_id: rec.sentence_id.clone(),
            doc_id: rec.doc_id.clone(),
            ngo_id: rec.ngo_id.clone(),
            group,
            text: rec.text.clone(),
            text_hash: sha256_hex(rec.text.as_bytes())[..16].to_string(),
            tree: t.label,
            models: picked.iter().map(|v| v.label).collect(),
            argumentation: picked.iter().map(|v| v.argumentation.clone()).collect(),
        });
    }
    let in_corpus = corpus.len();
    for ((model, vs), _) in verdicts.iter().zip(&model_maps) {
        if vs.len() > in_corpus {
            log::warn!("{model}: {} verdicts for sentences outside the corpus ignored", vs.len() - in_corpus);
        }
    }
    Ok(LabelMatrix {
        model_ids: verdicts.iter().map(|(m, _)| m.clone()).collect(),
        sources: sources.to_vec(),
        rows,
    })
}

fn index<'a, T>(
    name: &str,
    items: impl Iterator<Item = (&'a str, &'a T)>,
) -> Result<HashMap<&'a str, &'a T>, AnalyticsError> {
    let mut map = HashMap::new();
    for (id, item) in items {
        if map.insert(id, item).is_some() {
            return Err(AnalyticsError::DuplicateLabel { source_name: name.to_string(), sentence_id: id.to_string() });
        }
    }
    Ok(map)
}

/// Sentence and document counts per NGO, in source order.
pub fn corpus_table(matrix: &LabelMatrix) -> Vec<(String, Group, usize, usize)> {
    let mut counts: BTreeMap<&str, (std::collections::BTreeSet<&str>, usize)> = BTreeMap::new();
    for r in &matrix.rows {
        let e = counts.entry(&r.ngo_id).or_default();
        e.0.insert(&r.doc_id);
        e.1 += 1;
    }
    matrix
        .sources
        .iter()
        .map(|(id, g)| {
            let (docs, n) = counts.get(id.as_str()).map(|(d, n)| (d.len(), *n)).unwrap_or((0, 0));
            (id.clone(), *g, docs, n)
        })
        .collect()
}
