use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowercases character by character and collapses whitespace runs to a
/// single space. The matcher folds sentences the same way.
pub fn fold(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(c.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconNode {
    pub name: String,
    /// Folded surface forms; may be multi-word.
    #[serde(default)]
    pub variants: Vec<String>,
    #[serde(default)]
    pub children: Vec<LexiconNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub roots: Vec<LexiconNode>,
    /// Folded surface forms pruned for causing false positives.
    #[serde(default)]
    pub exclusions: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("`{0}` is both a variant and an exclusion")]
    Overlap(String),
    #[error("lexicon has no roots")]
    NoRoots,
    #[error("lexicon has no `general` root")]
    MissingGeneral,
    #[error("node name `{name}` repeats along path {}", .path.join(" > "))]
    RepeatedName { name: String, path: Vec<String> },
    #[error("empty variant under {}", .0.join(" > "))]
    EmptyVariant(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Non-fatal findings from validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconReport {
    /// Variants listed under more than one node, with every node path.
    pub shared_variants: BTreeMap<String, Vec<Vec<String>>>,
}

impl LexiconNode {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), variants: Vec::new(), children: Vec::new() }
    }
}

impl Lexicon {
    /// Visits every node depth-first with its root-to-node path.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&[String], &'a LexiconNode)) {
        fn rec<'a>(node: &'a LexiconNode, path: &mut Vec<String>, f: &mut impl FnMut(&[String], &'a LexiconNode)) {
            path.push(node.name.clone());
            f(path, node);
            for c in &node.children {
                rec(c, path, f);
            }
            path.pop();
        }
        let mut path = Vec::new();
        for r in &self.roots {
            rec(r, &mut path, &mut f);
        }
    }

    /// Every (variant, path) pair in depth-first order.
    pub fn variant_paths(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        self.walk(|path, node| {
            for v in &node.variants {
                out.push((v.clone(), path.to_vec()));
            }
        });
        out
    }

    pub fn validate(&self) -> Result<LexiconReport, LexiconError> {
        if self.roots.is_empty() {
            return Err(LexiconError::NoRoots);
        }
        if !self.roots.iter().any(|r| r.name.eq_ignore_ascii_case("general")) {
            return Err(LexiconError::MissingGeneral);
        }
        let mut err = None;
        self.walk(|path, node| {
            if err.is_some() {
                return;
            }
            let (last, ancestors) = path.split_last().expect("non-empty path");
            if ancestors.contains(last) {
                err = Some(LexiconError::RepeatedName { name: last.clone(), path: path.to_vec() });
            } else if node.variants.iter().any(|v| v.is_empty()) {
                err = Some(LexiconError::EmptyVariant(path.to_vec()));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }

        let exclusions: BTreeSet<&str> = self.exclusions.iter().map(String::as_str).collect();
        let mut report = LexiconReport::default();
        let mut seen: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for (v, path) in self.variant_paths() {
            if exclusions.contains(v.as_str()) {
                return Err(LexiconError::Overlap(v));
            }
            seen.entry(v).or_default().push(path);
        }
        report.shared_variants = seen.into_iter().filter(|(_, p)| p.len() > 1).collect();
        Ok(report)
    }

    /// Renders the editable indented text form.
    pub fn to_tree_string(&self) -> String {
        let mut out = String::new();
        if !self.exclusions.is_empty() {
            let _ = writeln!(out, "exclude: {}", self.exclusions.join(", "));
        }
        fn rec(node: &LexiconNode, depth: usize, out: &mut String) {
            let indent = "  ".repeat(depth);
            if node.variants.is_empty() {
                let _ = writeln!(out, "{indent}{}:", node.name);
            } else {
                let _ = writeln!(out, "{indent}{}: {}", node.name, node.variants.join(", "));
            }
            for c in &node.children {
                rec(c, depth + 1, out);
            }
        }
        for r in &self.roots {
            rec(r, 0, &mut out);
        }
        out
    }

    /// Canonical JSON export.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lexicon serializes")
    }
}
