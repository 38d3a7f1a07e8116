use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::audit::{duplicate_consistency, term_report, ConsistencyReport, TermReport};
use super::matrix::{corpus_table, LabelMatrix, Scope};
use super::stats::{disagreement_ratios, group_rates, pairwise_agreement, AgreementStats, DisagreementRatio, GroupRates};
use crate::harvest::Group;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub ngo_id: String,
    pub group: Group,
    pub n_documents: usize,
    pub n_sentences: usize,
}

/// Every statistic the reports are rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub model_ids: Vec<String>,
    pub corpus: Vec<CorpusRow>,
    pub rates: GroupRates,
    pub agreement: AgreementStats,
    pub ratios: Vec<DisagreementRatio>,
    pub terms: Vec<TermReport>,
    pub consistency: ConsistencyReport,
    /// Input fingerprints (name → hash) cited in every report.
    pub provenance: BTreeMap<String, String>,
}

pub fn analyze(matrix: &LabelMatrix, phrases: &[String], max_samples: usize) -> Analysis {
    Analysis {
        model_ids: matrix.model_ids.clone(),
        corpus: corpus_table(matrix)
            .into_iter()
            .map(|(ngo_id, group, n_documents, n_sentences)| CorpusRow { ngo_id, group, n_documents, n_sentences })
            .collect(),
        rates: group_rates(matrix),
        agreement: pairwise_agreement(matrix),
        ratios: disagreement_ratios(matrix),
        terms: phrases.iter().map(|p| term_report(matrix, p, max_samples)).collect(),
        consistency: duplicate_consistency(matrix),
        provenance: BTreeMap::new(),
    }
}

pub fn fmt_pct(x: f64) -> String {
    format!("{x:.1}")
}

pub fn fmt_ratio(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        "∞".into()
    } else {
        format!("{x:.2}")
    }
}

fn scope_label(s: &Scope) -> String {
    match s {
        Scope::Ngo(id) => id.clone(),
        Scope::SecularTotal => "Total secular".into(),
        Scope::ReligiousTotal => "Total religious".into(),
        Scope::Total => "Total".into(),
    }
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let esc = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|c| esc(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn footer(out: &mut String, a: &Analysis, notes: &[&str]) {
    out.push('\n');
    for n in notes {
        let _ = writeln!(out, "{n}\n");
    }
    if !a.provenance.is_empty() {
        out.push_str("Inputs:\n");
        for (k, v) in &a.provenance {
            let _ = writeln!(out, "- {k}: `{v}`");
        }
    }
}

fn slug(phrase: &str) -> String {
    let s: String = phrase
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    let s = s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-");
    if s.is_empty() {
        "phrase".into()
    } else {
        s
    }
}

fn label_str(l: Label) -> &'static str {
    l.as_str()
}

/// Writes table1–4 (Markdown and CSV), term and consistency reports and
/// `stats.json` into `dir`. Returns the files written, sorted.
pub fn render_reports(a: &Analysis, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("terms"))?;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let classifiers: Vec<String> = std::iter::once("tree".to_string()).chain(a.model_ids.iter().cloned()).collect();

    // Table 1
    let rows: Vec<Vec<String>> = a
        .corpus
        .iter()
        .map(|r| vec![r.ngo_id.clone(), r.group.as_str().into(), r.n_documents.to_string(), r.n_sentences.to_string()])
        .collect();
    files.push((dir.join("table1.csv"), csv(&["ngo_id", "group", "n_documents", "n_sentences"], &rows)));
    let mut md = String::from("# Sentences per NGO\n\n");
    let mut md_rows = rows.clone();
    for g in [Group::Secular, Group::Religious] {
        let (d, n) = a.corpus.iter().filter(|r| r.group == g).fold((0, 0), |acc, r| (acc.0 + r.n_documents, acc.1 + r.n_sentences));
        md_rows.push(vec![format!("Total {}", g.as_str()), String::new(), d.to_string(), n.to_string()]);
    }
    md_table(&mut md, &["NGO", "Group", "Documents", "Sentences"].map(String::from), &md_rows);
    footer(&mut md, a, &[]);
    files.push((dir.join("table1.md"), md));

    // Table 2
    let rows: Vec<Vec<String>> = a
        .rates
        .entries
        .iter()
        .map(|e| vec![e.classifier.clone(), e.scope.name().to_string(), fmt_pct(e.pct_yes), fmt_pct(e.pct_no)])
        .collect();
    files.push((dir.join("table2.csv"), csv(&["classifier", "scope", "pct_yes", "pct_no"], &rows)));
    let mut header = vec!["NGO".to_string(), "N".to_string()];
    for c in &classifiers {
        header.push(format!("{c} yes %"));
        header.push(format!("{c} no %"));
    }
    let mut scopes: Vec<&Scope> = Vec::new();
    for e in &a.rates.entries {
        if !scopes.contains(&&e.scope) {
            scopes.push(&e.scope);
        }
    }
    let md_rows: Vec<Vec<String>> = scopes
        .iter()
        .map(|s| {
            let mut row = vec![scope_label(s)];
            let mut n = 0;
            for c in &classifiers {
                if let Some(e) = a.rates.get(c, s) {
                    n = e.counts.n;
                    row.push(fmt_pct(e.pct_yes));
                    row.push(fmt_pct(e.pct_no));
                }
            }
            row.insert(1, n.to_string());
            row
        })
        .collect();
    let mut md = String::from("# Share of sentences labelled religious\n\n");
    md_table(&mut md, &header, &md_rows);
    footer(&mut md, a, &["Totals pool sentences across NGOs. Yes and no may sum to less than 100% for a model; the gap is malformed responses."]);
    files.push((dir.join("table2.md"), md));

    // Table 3
    let pair_names: Vec<String> = a
        .agreement
        .scopes
        .first()
        .map(|s| s.pairs.iter().map(|p| format!("{}_{}", p.a, p.b)).collect())
        .unwrap_or_default();
    let rows: Vec<Vec<String>> = a
        .agreement
        .scopes
        .iter()
        .map(|s| {
            let mut r = vec![s.scope.name().to_string(), s.n.to_string(), fmt_pct(s.overall_pct)];
            r.extend(s.pairs.iter().map(|p| fmt_pct(p.pct)));
            r
        })
        .collect();
    let mut h: Vec<&str> = vec!["scope", "n", "overall"];
    h.extend(pair_names.iter().map(String::as_str));
    files.push((dir.join("table3.csv"), csv(&h, &rows)));
    let mut header = vec!["NGO".to_string(), "N".to_string(), "Overall %".to_string()];
    if let Some(s) = a.agreement.scopes.first() {
        header.extend(s.pairs.iter().map(|p| format!("{} / {} %", p.a, p.b)));
    }
    let md_rows: Vec<Vec<String>> = a
        .agreement
        .scopes
        .iter()
        .zip(&rows)
        .map(|(s, r)| {
            let mut r = r.clone();
            r[0] = scope_label(&s.scope);
            r
        })
        .collect();
    let mut md = String::from("# Agreement between classifiers\n\n");
    md_table(&mut md, &header, &md_rows);
    footer(
        &mut md,
        a,
        &[
            "A malformed response counts as a disagreement in every pair, including pairs with the tree.",
            "Overall agreement requires every label to be valid and equal.",
        ],
    );
    files.push((dir.join("table3.md"), md));

    // Table 4
    let rows: Vec<Vec<String>> = a
        .ratios
        .iter()
        .map(|d| {
            vec![
                d.model.clone(),
                d.scope.name().to_string(),
                d.n_disagreement.to_string(),
                d.n_yes.to_string(),
                d.n_no.to_string(),
                d.n_malformed.to_string(),
                fmt_ratio(d.ratio()),
                fmt_pct(d.malformed_pct()),
            ]
        })
        .collect();
    files.push((
        dir.join("table4.csv"),
        csv(&["model", "scope", "n_disagreement", "n_yes", "n_no", "n_malformed", "ratio", "malformed_pct"], &rows),
    ));
    let mut md = String::from("# Yes/no ratio where the models disagree\n\n");
    let md_rows: Vec<Vec<String>> = a
        .ratios
        .iter()
        .zip(&rows)
        .map(|(d, r)| {
            let mut r = r.clone();
            r[1] = scope_label(&d.scope);
            r
        })
        .collect();
    md_table(
        &mut md,
        &["Model", "NGO", "Disagreements", "Yes", "No", "Malformed", "Yes:No", "Malformed %"].map(String::from),
        &md_rows,
    );
    footer(
        &mut md,
        a,
        &["Yes:No counts the model's valid answers on sentences where the two models disagree; ∞ means no \"no\" answers, NaN no valid answers."],
    );
    files.push((dir.join("table4.md"), md));

    // Terms
    for t in &a.terms {
        let mut md = format!("# \"{}\"\n\n{} sentences contain the phrase.\n\n", t.phrase, t.n_sentences);
        let rows: Vec<Vec<String>> = t
            .per_classifier
            .iter()
            .map(|c| {
                vec![c.classifier.clone(), c.counts.n_yes.to_string(), fmt_pct(c.pct_yes), c.counts.n_malformed.to_string()]
            })
            .collect();
        md_table(&mut md, &["Classifier", "Yes", "Yes %", "Malformed"].map(String::from), &rows);
        if !t.samples.is_empty() {
            md.push_str("\n## Samples\n\n");
            for s in &t.samples {
                let labels: Vec<String> =
                    classifiers.iter().zip(&s.labels).map(|(c, l)| format!("{c}={}", label_str(*l))).collect();
                let _ = writeln!(md, "- `{}` ({}) {}\n  > {}", s.sentence_id, s.ngo_id, labels.join(", "), s.text);
                for (m, arg) in a.model_ids.iter().zip(&s.argumentation) {
                    if let Some(arg) = arg {
                        let _ = writeln!(md, "  - {m}: {arg}");
                    }
                }
            }
        }
        footer(&mut md, a, &[]);
        files.push((dir.join("terms").join(format!("{}.md", slug(&t.phrase))), md));
    }

    // Consistency
    let mut md = String::from("# Labels of repeated sentences\n\n");
    if a.consistency.groups.is_empty() {
        md.push_str("No sentence occurs more than once.\n");
    } else {
        let mut header = vec!["Sentence".to_string(), "N".to_string()];
        header.extend(classifiers.iter().map(|c| format!("{c} yes/no/malformed (consistency)")));
        let rows: Vec<Vec<String>> = a
            .consistency
            .groups
            .iter()
            .map(|g| {
                let mut r = vec![g.text.replace('|', "\\|"), g.n_occurrences.to_string()];
                r.extend(g.splits.iter().map(|s| {
                    let c = s.consistency.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                    format!("{}/{}/{} ({c})", s.counts.n_yes, s.counts.n_no, s.counts.n_malformed)
                }));
                r
            })
            .collect();
        md_table(&mut md, &header, &rows);
    }
    footer(&mut md, a, &["Sentences are grouped by text with whitespace normalized and case kept. Consistency is the share of the majority label among valid labels."]);
    files.push((dir.join("consistency.md"), md));

    let json = serde_json::to_string_pretty(a).map_err(io::Error::other)?;
    files.push((dir.join("stats.json"), json + "\n"));

    let mut written = Vec::new();
    for (path, content) in files {
        fs::write(&path, content)?;
        written.push(path);
    }
    written.sort();
    Ok(written)
}
