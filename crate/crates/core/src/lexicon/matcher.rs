//! Single-pass multi-pattern matching with word-boundary semantics.
//!
//! Sentences are folded (lowercased, whitespace runs collapsed) while
//! keeping a map back to original character offsets. All variants and
//! exclusions are searched simultaneously with an Aho-Corasick automaton
//! in overlapping mode. A hit counts only when the characters on either
//! side are non-alphanumeric (or the string edge) and its ends line up
//! with original characters. Variant hits lying inside an exclusion hit
//! are suppressed.

use std::collections::BTreeMap;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};

use super::tree::{fold, Lexicon};
use crate::text::SentenceRecord;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub variant: String,
    /// Root-to-node names of the first node listing the variant.
    pub path: Vec<String>,
    /// Further nodes listing the same variant, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other_paths: Vec<Vec<String>>,
    /// `[start, end)` in characters of the original sentence.
    pub span: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub sentence_id: String,
    pub matches: Vec<Match>,
    pub match_count: usize,
    pub label: Label,
}

#[derive(Debug, Clone)]
struct Pattern {
    form: String,
    paths: Vec<Vec<String>>,
    exclusion: bool,
}

/// Immutable compiled lexicon; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Matcher {
    automaton: AhoCorasick,
    patterns: Vec<Pattern>,
}

impl Matcher {
    /// Number of distinct variant forms (exclusions not counted).
    pub fn pattern_count(&self) -> usize {
        self.patterns.iter().filter(|p| !p.exclusion).count()
    }

    pub fn exclusion_count(&self) -> usize {
        self.patterns.iter().filter(|p| p.exclusion).count()
    }
}

pub fn compile_matcher(lexicon: &Lexicon) -> Matcher {
    let mut by_form: BTreeMap<String, usize> = BTreeMap::new();
    let mut patterns: Vec<Pattern> = Vec::new();
    for (variant, path) in lexicon.variant_paths() {
        let form = fold(&variant);
        if form.is_empty() {
            continue;
        }
        match by_form.get(&form) {
            Some(&i) => patterns[i].paths.push(path),
            None => {
                by_form.insert(form.clone(), patterns.len());
                patterns.push(Pattern { form, paths: vec![path], exclusion: false });
            }
        }
    }
    for ex in &lexicon.exclusions {
        let form = fold(ex);
        if !form.is_empty() && !by_form.contains_key(&form) {
            by_form.insert(form.clone(), patterns.len());
            patterns.push(Pattern { form, paths: Vec::new(), exclusion: true });
        }
    }
    let automaton = AhoCorasick::builder()
        .match_kind(MatchKind::Standard)
        .build(patterns.iter().map(|p| p.form.as_str()))
        .expect("automaton builds");
    Matcher { automaton, patterns }
}

/// Folded sentence with, for every folded byte, the index of the
/// original character it came from.
struct Folded {
    text: String,
    origin: Vec<usize>,
    /// True where a folded byte begins the expansion of an original char.
    opens: Vec<bool>,
}

fn fold_with_map(s: &str) -> Folded {
    let mut text = String::with_capacity(s.len());
    let mut origin = Vec::with_capacity(s.len());
    let mut opens = Vec::with_capacity(s.len());
    let mut last_space = false;
    for (ci, c) in s.chars().enumerate() {
        if c.is_whitespace() {
            if !last_space {
                text.push(' ');
                origin.push(ci);
                opens.push(true);
                last_space = true;
            }
            continue;
        }
        last_space = false;
        let mut first = true;
        for lc in c.to_lowercase() {
            let mut buf = [0u8; 4];
            for (k, _) in lc.encode_utf8(&mut buf).bytes().enumerate() {
                origin.push(ci);
                opens.push(first && k == 0);
            }
            first = false;
        }
        text.push_str(&c.to_lowercase().collect::<String>());
    }
    Folded { text, origin, opens }
}

impl Folded {
    /// Whether the folded range `[start, end)` covers whole original chars
    /// and sits on word boundaries.
    fn accepts(&self, start: usize, end: usize) -> bool {
        if !self.opens[start] {
            return false;
        }
        if end < self.opens.len() && !self.opens[end] {
            return false;
        }
        let before = self.text[..start].chars().next_back();
        let after = self.text[end..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    }

    fn char_span(&self, start: usize, end: usize) -> [usize; 2] {
        [self.origin[start], self.origin[end - 1] + 1]
    }
}

pub fn match_sentence(matcher: &Matcher, sentence_id: &str, text: &str) -> MatchResult {
    let folded = fold_with_map(text);
    let mut hits: Vec<(usize, [usize; 2])> = Vec::new();
    let mut excluded: Vec<[usize; 2]> = Vec::new();
    for m in matcher.automaton.find_overlapping_iter(&folded.text) {
        if !folded.accepts(m.start(), m.end()) {
            continue;
        }
        let span = folded.char_span(m.start(), m.end());
        let pid = m.pattern().as_usize();
        if matcher.patterns[pid].exclusion {
            excluded.push(span);
        } else {
            hits.push((pid, span));
        }
    }
    hits.retain(|(_, span)| !excluded.iter().any(|ex| ex[0] <= span[0] && span[1] <= ex[1]));
    hits.sort_by(|a, b| (a.1, &matcher.patterns[a.0].form).cmp(&(b.1, &matcher.patterns[b.0].form)));
    hits.dedup();

    let matches: Vec<Match> = hits
        .into_iter()
        .map(|(pid, span)| {
            let p = &matcher.patterns[pid];
            Match {
                variant: p.form.clone(),
                path: p.paths[0].clone(),
                other_paths: p.paths[1..].to_vec(),
                span,
            }
        })
        .collect();
    let match_count = matches.len();
    MatchResult {
        sentence_id: sentence_id.to_string(),
        matches,
        match_count,
        label: if match_count > 0 { Label::Yes } else { Label::No },
    }
}

/// One result per sentence, in corpus order. Large corpora are split
/// across threads; the matcher is shared read-only.
pub fn classify_corpus(matcher: &Matcher, corpus: &[SentenceRecord]) -> Vec<MatchResult> {
    const SHARD: usize = 4096;
    if corpus.len() <= SHARD {
        return corpus.iter().map(|r| match_sentence(matcher, &r.sentence_id, &r.text)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .chunks(SHARD)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk.iter().map(|r| match_sentence(matcher, &r.sentence_id, &r.text)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("matcher shard panicked")).collect()
    })
}

/// Per-NGO `(yes, total)` counts for a classified corpus.
pub fn yes_rates(corpus: &[SentenceRecord], results: &[MatchResult]) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (rec, res) in corpus.iter().zip(results) {
        let e = out.entry(rec.ngo_id.clone()).or_default();
        e.1 += 1;
        if res.label == Label::Yes {
            e.0 += 1;
        }
    }
    out
}
