use serde::{Deserialize, Serialize};

use super::matrix::{LabelMatrix, Scope};
use crate::Label;

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub n: usize,
    pub n_yes: usize,
    pub n_no: usize,
    pub n_malformed: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: Label) {
        self.n += 1;
        match label {
            Label::Yes => self.n_yes += 1,
            Label::No => self.n_no += 1,
            Label::Malformed => self.n_malformed += 1,
        }
    }

    pub fn pct_yes(&self) -> f64 {
        pct(self.n_yes, self.n)
    }

    pub fn pct_no(&self) -> f64 {
        pct(self.n_no, self.n)
    }

    pub fn pct_malformed(&self) -> f64 {
        pct(self.n_malformed, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub classifier: String,
    pub scope: Scope,
    pub counts: LabelCounts,
    pub pct_yes: f64,
    pub pct_no: f64,
}

/// Weighted yes/no percentages per (classifier, scope). Totals pool
/// sentences across NGOs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub entries: Vec<RateEntry>,
}

impl GroupRates {
    pub fn get(&self, classifier: &str, scope: &Scope) -> Option<&RateEntry> {
        self.entries.iter().find(|e| e.classifier == classifier && &e.scope == scope)
    }
}

pub fn group_rates(matrix: &LabelMatrix) -> GroupRates {
    let classifiers = matrix.classifiers();
    let mut entries = Vec::new();
    for (scope, idx) in matrix.scope_rows() {
        for (c, name) in classifiers.iter().enumerate() {
            let mut counts = LabelCounts::default();
            for &i in &idx {
                counts.add(matrix.rows[i].label(c));
            }
            entries.push(RateEntry {
                classifier: name.clone(),
                scope: scope.clone(),
                pct_yes: counts.pct_yes(),
                pct_no: counts.pct_no(),
                counts,
            });
        }
    }
    GroupRates { entries }
}

/// Two labels agree when both are valid and equal; malformed on either
/// side is a disagreement.
pub fn agrees(a: Label, b: Label) -> bool {
    a.is_valid() && a == b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub a: String,
    pub b: String,
    pub agree: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeAgreement {
    pub scope: Scope,
    pub n: usize,
    /// Rows where every classifier gave the same valid label.
    pub overall: usize,
    pub overall_pct: f64,
    /// Every classifier pair, tree first, in classifier order.
    pub pairs: Vec<PairAgreement>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub scopes: Vec<ScopeAgreement>,
}

pub fn pairwise_agreement(matrix: &LabelMatrix) -> AgreementStats {
    let names = matrix.classifiers();
    let k = names.len();
    let mut scopes = Vec::new();
    for (scope, idx) in matrix.scope_rows() {
        let mut pair_counts = vec![0usize; k * k];
        let mut overall = 0;
        for &i in &idx {
            let row = &matrix.rows[i];
            let labels: Vec<Label> = (0..k).map(|c| row.label(c)).collect();
            if labels.iter().all(|l| agrees(*l, labels[0])) {
                overall += 1;
            }
            for a in 0..k {
                for b in a + 1..k {
                    if agrees(labels[a], labels[b]) {
                        pair_counts[a * k + b] += 1;
                    }
                }
            }
        }
        let n = idx.len();
        let mut pairs = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let agree = pair_counts[a * k + b];
                pairs.push(PairAgreement { a: names[a].clone(), b: names[b].clone(), agree, pct: pct(agree, n) });
            }
        }
        scopes.push(ScopeAgreement { scope, n, overall, overall_pct: pct(overall, n), pairs });
    }
    AgreementStats { scopes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRatio {
    pub model: String,
    pub scope: Scope,
    /// Size of the disagreement subset in this scope.
    pub n_disagreement: usize,
    pub n_yes: usize,
    pub n_no: usize,
    pub n_malformed: usize,
}

impl DisagreementRatio {
    /// `n_yes / n_no`; infinite when only yes, NaN when neither.
    pub fn ratio(&self) -> f64 {
        self.n_yes as f64 / self.n_no as f64
    }

    pub fn malformed_pct(&self) -> f64 {
        pct(self.n_malformed, self.n_disagreement)
    }
}

/// Yes:no balance of each of the first two models on the rows where those
/// two models do not agree. Empty when fewer than two models are present.
pub fn disagreement_ratios(matrix: &LabelMatrix) -> Vec<DisagreementRatio> {
    if matrix.model_ids.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (scope, idx) in matrix.scope_rows() {
        let d: Vec<usize> = idx.into_iter().filter(|&i| !agrees(matrix.rows[i].models[0], matrix.rows[i].models[1])).collect();
        for m in 0..2 {
            let mut counts = LabelCounts::default();
            for &i in &d {
                counts.add(matrix.rows[i].models[m]);
            }
            out.push(DisagreementRatio {
                model: matrix.model_ids[m].clone(),
                scope: scope.clone(),
                n_disagreement: d.len(),
                n_yes: counts.n_yes,
                n_no: counts.n_no,
                n_malformed: counts.n_malformed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::matrix::MatrixRow;
    use crate::harvest::Group;
    use Label::{Malformed as M, No as N, Yes as Y};

    pub(crate) fn matrix(rows: &[(Label, Label, Label)]) -> LabelMatrix {
        LabelMatrix {
            model_ids: vec!["gpt".into(), "llama".into()],
            sources: vec![("a".into(), Group::Religious)],
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, &(t, g, l))| MatrixRow {
                    sentence_id: i.to_string(),
                    doc_id: "d".into(),
                    ngo_id: "a".into(),
                    group: Group::Religious,
                    text: i.to_string(),
                    text_hash: String::new(),
                    tree: t,
                    models: vec![g, l],
                    argumentation: vec![None, None],
                })
                .collect(),
        }
    }

    #[test]
    fn all_yes_rate() {
        let r = group_rates(&matrix(&[(Y, Y, Y), (Y, Y, Y)]));
        assert_eq!(r.get("tree", &Scope::Total).unwrap().pct_yes, 100.0);
    }

    #[test]
    fn malformed_gap() {
        let r = group_rates(&matrix(&[(Y, Y, Y), (N, N, N), (N, M, N), (Y, Y, N)]));
        let gpt = r.get("gpt", &Scope::Ngo("a".into())).unwrap();
        assert_eq!(gpt.pct_yes + gpt.pct_no, 75.0);
        let tree = r.get("tree", &Scope::Total).unwrap();
        assert_eq!(tree.pct_yes + tree.pct_no, 100.0);
    }

    #[test]
    fn agreement_examples() {
        let a = pairwise_agreement(&matrix(&[(Y, Y, Y), (N, N, N)]));
        let s = &a.scopes[0];
        assert_eq!(s.overall_pct, 100.0);
        assert!(s.pairs.iter().all(|p| p.pct == 100.0));

        let a = pairwise_agreement(&matrix(&[(Y, Y, M)]));
        let s = &a.scopes[0];
        let get = |x: &str, y: &str| s.pairs.iter().find(|p| p.a == x && p.b == y).unwrap().pct;
        assert_eq!(get("gpt", "llama"), 0.0);
        assert_eq!(get("tree", "gpt"), 100.0);
        assert_eq!(get("tree", "llama"), 0.0);
        assert_eq!(s.overall_pct, 0.0);
    }

    #[test]
    fn ratio_examples() {
        // GPT {y:1, n:2} inside the disagreement set.
        let m = matrix(&[(N, Y, N), (N, N, Y), (N, N, M), (Y, Y, Y)]);
        let r = disagreement_ratios(&m);
        let gpt = r.iter().find(|d| d.model == "gpt" && d.scope == Scope::Total).unwrap();
        assert_eq!((gpt.n_disagreement, gpt.n_yes, gpt.n_no), (3, 1, 2));
        assert_eq!(gpt.ratio(), 0.5);
        let llama = r.iter().find(|d| d.model == "llama" && d.scope == Scope::Total).unwrap();
        assert_eq!((llama.n_yes, llama.n_no, llama.n_malformed), (1, 1, 1));

        let clean = disagreement_ratios(&matrix(&[(N, Y, N), (N, Y, N), (N, N, Y)]));
        let g = clean.iter().find(|d| d.model == "gpt" && d.scope == Scope::Total).unwrap().ratio();
        let l = clean.iter().find(|d| d.model == "llama" && d.scope == Scope::Total).unwrap().ratio();
        assert_eq!(g * l, 1.0);

        let only_yes = disagreement_ratios(&matrix(&[(N, Y, N)]));
        assert!(only_yes[0].ratio().is_infinite());
        assert!(disagreement_ratios(&matrix(&[(N, Y, Y)]))[0].ratio().is_nan());
    }
}
