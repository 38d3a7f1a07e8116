//! Rule-based sentence splitting.
//!
//! Boundaries fall after runs of `.`, `!` or `?` (plus closing quotes or
//! brackets) that are followed by whitespace or the end of text, and at
//! every newline run. A period closing a known abbreviation or an initial
//! is not a boundary. Periods inside a token (numbers, URLs, e-mail
//! addresses) are never followed by whitespace and so never split.

/// Recorded in run manifests; bump whenever the rules or list change.
pub const SPLITTER_VERSION: &str = "rules-1";

/// Lowercase, without the trailing period.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "rev", "revd", "fr", "sr", "jr", "st", "mt", "gen", "gov",
    "sen", "rep", "hon", "capt", "col", "lt", "sgt", "messrs", "e.g", "i.e", "etc", "vs", "cf",
    "approx", "ca", "vol", "pp", "ed", "eds", "fig", "dept", "inc", "ltd", "co", "corp", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "al", "a.m",
    "p.m", "no",
];

const TERMINAL: &[char] = &['.', '!', '?', '…'];
const CLOSING: &[char] = &['"', '\'', '’', '”', ')', ']', '»'];
const OPENING: &[char] = &['"', '\'', '‘', '“', '(', '[', '«'];

pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let emit = |from: usize, to: usize, out: &mut Vec<String>| {
        let piece = text[from..to].trim();
        if piece.chars().count() >= 2 {
            out.push(piece.to_string());
        }
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' || c == '\r' {
            emit(start, pos, &mut out);
            while i < chars.len() && (chars[i].1 == '\n' || chars[i].1 == '\r') {
                i += 1;
            }
            start = chars.get(i).map_or(text.len(), |(p, _)| *p);
            continue;
        }
        if TERMINAL.contains(&c) {
            let run_start = i;
            let mut j = i;
            while j < chars.len() && TERMINAL.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSING.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
            let at_gap = j == chars.len() || chars[j].1.is_whitespace();
            let single_period = c == '.' && (run_start + 1 == chars.len() || !TERMINAL.contains(&chars[run_start + 1].1));
            if at_gap && !(single_period && is_abbreviation(text, start, pos)) {
                emit(start, end, &mut out);
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    emit(start, text.len(), &mut out);
    out
}

/// Whether the token ending at the period at byte `period` is an
/// abbreviation or an initial.
fn is_abbreviation(text: &str, sentence_start: usize, period: usize) -> bool {
    let before = &text[sentence_start..period];
    let token = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(OPENING);
    if token.is_empty() {
        return false;
    }
    let lower = token.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // Initials: "J." or dotted runs like "U.S". A lone "I" is the pronoun.
    token != "I"
        && lower.split('.').all(|part| {
        let mut cs = part.chars();
        matches!((cs.next(), cs.next()), (Some(ch), None) if ch.is_alphabetic())
        })
        && token.chars().next().is_some_and(char::is_uppercase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::normalize_whitespace;
    use proptest::prelude::*;

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(segment_sentences("Rev. Bill spoke. He left."), vec!["Rev. Bill spoke.", "He left."]);
    }

    #[test]
    fn empty_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n \n").is_empty());
    }

    #[test]
    fn url_token_is_protected() {
        assert_eq!(
            segment_sentences("Visit https://a.b/c. Then pray."),
            vec!["Visit https://a.b/c.", "Then pray."]
        );
    }

    #[test]
    fn numbers_emails_and_initials() {
        assert_eq!(
            segment_sentences("Prices rose 3.5 percent. Write to info@arocha.org today! J. R. Smith agreed."),
            vec!["Prices rose 3.5 percent.", "Write to info@arocha.org today!", "J. R. Smith agreed."]
        );
        assert_eq!(
            segment_sentences("Pray for e.g. rain, i.e. water. Done?! Yes."),
            vec!["Pray for e.g. rain, i.e. water.", "Done?!", "Yes."]
        );
    }

    #[test]
    fn newlines_and_closing_quotes() {
        assert_eq!(
            segment_sentences("For Our Sacred Earth\nAug 28, 2024\n\nClimate change threatens \"everyone.\" Act now"),
            vec!["For Our Sacred Earth", "Aug 28, 2024", "Climate change threatens \"everyone.\"", "Act now"]
        );
    }

    #[test]
    fn drops_tiny_pieces() {
        assert_eq!(segment_sentences("A. Ok. \n.\n"), vec!["A. Ok."]);
        assert_eq!(segment_sentences("So do I. Then go."), vec!["So do I.", "Then go."]);
        assert_eq!(segment_sentences("x\nyes"), vec!["yes"]);
    }

    #[test]
    fn curly_quotes_and_dashes() {
        let doc = "At least four of St Paul’s letters are traditionally called the ‘prison epistles’: \
                   Ephesians, Philippians, Colossians, and Philemon. As I mentioned above, the apostles \
                   and disciples are imprisoned a number of times in the Book of Acts. It was of course \
                   from prison that Dietrich Bonhoeffer penned those electrifying words in his ‘Letters \
                   and Papers from Prison’.";
        assert_eq!(segment_sentences(doc).len(), 3);
    }

    proptest! {
        #[test]
        fn coverage_is_lossless(words in prop::collection::vec(
            prop::sample::select(vec!["God", "Rev.", "prayer.", "e.g.", "3.5", "hope!", "why?", "\n", "a.b/c.", "Earth", "\"yes.\"", "St."]),
            0..40,
        )) {
            let text = words.join(" ");
            let segments = segment_sentences(&text);
            for s in &segments {
                prop_assert!(s.chars().count() >= 2);
                prop_assert_eq!(s.trim(), s.as_str());
            }
            // Pieces shorter than two characters are the only thing dropped.
            let joined = normalize_whitespace(&segments.join(" "));
            let original = normalize_whitespace(&text);
            prop_assert!(joined.len() <= original.len());
            let mut rest = original.as_str();
            for s in &segments {
                let s = normalize_whitespace(s);
                let idx = rest.find(&s);
                prop_assert!(idx.is_some(), "segment {:?} not found in order", s);
                let skipped = &rest[..idx.unwrap()];
                prop_assert!(skipped.split_whitespace().all(|w| w.chars().count() < 2), "lost text {:?}", skipped);
                rest = &rest[idx.unwrap() + s.len()..];
            }
            prop_assert!(rest.split_whitespace().all(|w| w.chars().count() < 2));
        }
    }
}
