use std::path::Path;

use super::tree::{fold, Lexicon, LexiconError, LexiconNode, LexiconReport};

/// Parses the indented tree format and validates the result.
///
/// ```text
/// exclude: love, hope
/// Buddhism: buddhism, buddhist
///   Concepts: nirvana
/// general: god
/// ```
pub fn parse_lexicon(text: &str) -> Result<(Lexicon, LexiconReport), LexiconError> {
    let mut lex = Lexicon { roots: Vec::new(), exclusions: Vec::new() };
    // Index of the open node at each depth.
    let mut open: Vec<usize> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: &str| LexiconError::Parse { line: line_no, message: message.to_string() };
        let content = raw.trim_end();
        let trimmed = content.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = &content[..content.len() - trimmed.len()];
        if indent.contains('\t') {
            return Err(err("tabs are not allowed in indentation"));
        }
        if indent.len() % 2 != 0 {
            return Err(err("indentation must be a multiple of two spaces"));
        }
        let depth = indent.len() / 2;
        if depth > open.len() {
            return Err(err("indented more than one level below its parent"));
        }

        let (name, rest) = match trimmed.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (trimmed.trim(), ""),
        };
        if name.is_empty() {
            return Err(err("missing node name"));
        }
        let forms: Vec<String> = rest
            .split(',')
            .map(fold)
            .filter(|v| !v.is_empty())
            .collect();
        if rest.split(',').count() > 1 && rest.split(',').any(|v| v.trim().is_empty()) {
            return Err(err("empty entry in comma-separated list"));
        }

        if depth == 0 && name == "exclude" {
            lex.exclusions.extend(forms);
            open.clear();
            continue;
        }

        let node = LexiconNode { name: name.to_string(), variants: forms, children: Vec::new() };
        open.truncate(depth);
        let siblings = children_at(&mut lex.roots, &open);
        siblings.push(node);
        open.push(siblings.len() - 1);
    }

    lex.exclusions.sort();
    lex.exclusions.dedup();
    let report = lex.validate()?;
    Ok((lex, report))
}

fn children_at<'a>(roots: &'a mut Vec<LexiconNode>, path: &[usize]) -> &'a mut Vec<LexiconNode> {
    let mut level = roots;
    for &i in path {
        level = &mut level[i].children;
    }
    level
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<(Lexicon, LexiconReport), LexiconError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        let lex: Lexicon = serde_json::from_str(&text).map_err(|e| LexiconError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let report = lex.validate()?;
        return Ok((lex, report));
    }
    parse_lexicon(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{starter_lexicon, STARTER_LEXICON};

    #[test]
    fn starter_has_expected_roots_and_terms() {
        let lex = starter_lexicon();
        let names: Vec<&str> = lex.roots.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "Christianity",
                "Islam",
                "Judaism",
                "Hinduism",
                "Buddhism",
                "indigenous cosmovisions",
                "nature spiritualities",
                "general"
            ]
        );
        let paths = lex.variant_paths();
        let find = |v: &str| paths.iter().find(|(x, _)| x == v).map(|(_, p)| p.clone());
        assert_eq!(find("nirvana").unwrap()[0], "Buddhism");
        assert_eq!(find("god").unwrap(), vec!["general"]);
        assert_eq!(find("prayer").unwrap()[0], "general");
        assert_eq!(lex.exclusions, vec!["hope", "love", "submission"]);
        for term in [
            "sacred", "mother earth", "bless", "blesses", "blessed", "blessing", "ritual", "chaplain", "friary",
            "christian", "jewish", "muslim", "hindu", "buddhist", "koran", "bible", "sacrifice", "sacrifices",
            "sacrificed", "sacrificing", "devote", "devotes", "devoted", "devotion", "ubuntu",
        ] {
            assert!(find(term).is_some(), "missing {term}");
        }
        assert!(STARTER_LEXICON.contains("exclude:"));
    }

    #[test]
    fn love_as_variant_and_exclusion_fails() {
        let err = parse_lexicon("exclude: love\ngeneral: god, love\n").unwrap_err();
        assert_eq!(err, LexiconError::Overlap("love".into()));
    }

    #[test]
    fn empty_file_has_no_roots() {
        assert_eq!(parse_lexicon("# nothing\n\nexclude: hope\n").unwrap_err(), LexiconError::NoRoots);
    }

    #[test]
    fn indentation_errors_carry_line_numbers() {
        assert_eq!(
            parse_lexicon("general: god\n   Prayer: pray\n").unwrap_err(),
            LexiconError::Parse { line: 2, message: "indentation must be a multiple of two spaces".into() }
        );
        assert!(matches!(
            parse_lexicon("general: god\n    Prayer: pray\n"),
            Err(LexiconError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_lexicon("general: god,,pray\n"), Err(LexiconError::Parse { line: 1, .. })));
    }

    #[test]
    fn variants_are_folded() {
        let (lex, _) = parse_lexicon("general:  Mother   Earth , GOD\n").unwrap();
        assert_eq!(lex.roots[0].variants, vec!["mother earth", "god"]);
    }

    #[test]
    fn tree_text_and_json_round_trip() {
        let lex = starter_lexicon();
        let (again, _) = parse_lexicon(&lex.to_tree_string()).unwrap();
        assert_eq!(again, lex);
        let from_json: Lexicon = serde_json::from_str(&lex.to_json()).unwrap();
        assert_eq!(from_json, lex);
    }

    #[test]
    fn loads_json_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lexicon.json");
        std::fs::write(&path, starter_lexicon().to_json()).unwrap();
        assert_eq!(load_lexicon(&path).unwrap().0, starter_lexicon());
        assert!(matches!(load_lexicon(dir.path().join("missing.tree")), Err(LexiconError::Io { .. })));
    }
}
