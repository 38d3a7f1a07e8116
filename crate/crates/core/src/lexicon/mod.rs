//! Hierarchical religious-concept lexicon and its sentence matcher.

mod matcher;
mod parse;
mod tree;

pub use matcher::{classify_corpus, compile_matcher, match_sentence, yes_rates, Match, MatchResult, Matcher};
pub use parse::{load_lexicon, parse_lexicon};
pub use tree::{fold, Lexicon, LexiconError, LexiconNode, LexiconReport};

/// The bundled starter tree in its editable text form.
pub const STARTER_LEXICON: &str = include_str!("../../data/starter.tree");

/// Parses [`STARTER_LEXICON`].
pub fn starter_lexicon() -> Lexicon {
    parse_lexicon(STARTER_LEXICON).expect("bundled lexicon is valid").0
}
