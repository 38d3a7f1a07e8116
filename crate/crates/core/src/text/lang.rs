//! Character-trigram language identification over a small built-in set.
//!
//! Features are trigrams of space-padded lowercase words, so the feature
//! bag (and therefore the verdict) does not depend on word or sentence
//! order. Scores are naive-Bayes log-likelihoods with add-one smoothing;
//! the posterior of the winner is scaled by an evidence factor that
//! reaches 1 at twice [`MIN_EVIDENCE_CHARS`].

use std::collections::HashMap;
use std::sync::OnceLock;

pub const SUPPORTED_LANGUAGES: &[&str] = &["en", "nl", "de", "fr", "es"];

/// Below this many characters the confidence is at most 0.5.
pub const MIN_EVIDENCE_CHARS: usize = 40;

const TRAINING: &[(&str, &str)] = &[
    ("en", include_str!("../../data/lang/en.txt")),
    ("nl", include_str!("../../data/lang/nl.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageGuess {
    /// ISO-639-1 code, or `und` when the text has no letters.
    pub lang: String,
    pub confidence: f64,
}

struct Profile {
    lang: &'static str,
    counts: HashMap<String, u32>,
    total: u32,
}

struct Model {
    profiles: Vec<Profile>,
    vocabulary: usize,
}

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        let profiles: Vec<Profile> = TRAINING
            .iter()
            .map(|(lang, text)| {
                let mut counts = HashMap::new();
                for t in trigrams(text) {
                    *counts.entry(t).or_insert(0u32) += 1;
                }
                let total = counts.values().sum();
                Profile { lang, counts, total }
            })
            .collect();
        let mut vocab = std::collections::HashSet::new();
        for p in &profiles {
            vocab.extend(p.counts.keys().cloned());
        }
        Model { profiles, vocabulary: vocab.len() }
    })
}

fn trigrams(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for word in lower.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars())
            .chain(std::iter::once(' '))
            .collect();
        out.extend(padded.windows(3).map(|w| w.iter().collect::<String>()));
    }
    out
}

pub fn detect_language(text: &str) -> LanguageGuess {
    let grams = trigrams(text);
    if grams.is_empty() {
        return LanguageGuess { lang: "und".into(), confidence: 0.0 };
    }
    let model = model();
    let mut bag: HashMap<&str, u32> = HashMap::new();
    for g in &grams {
        *bag.entry(g.as_str()).or_insert(0) += 1;
    }
    // Fixed iteration order keeps the floating-point sums reproducible.
    let mut bag: Vec<(&str, u32)> = bag.into_iter().collect();
    bag.sort_unstable();

    let v = model.vocabulary as f64;
    let scores: Vec<f64> = model
        .profiles
        .iter()
        .map(|p| {
            let denom = (p.total as f64 + v).ln();
            bag.iter()
                .map(|(g, n)| {
                    let c = p.counts.get(*g).copied().unwrap_or(0) as f64;
                    *n as f64 * ((c + 1.0).ln() - denom)
                })
                .sum()
        })
        .collect();

    let (best, best_score) = scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc });
    let partition: f64 = scores.iter().map(|s| (s - best_score).exp()).sum();
    let posterior = 1.0 / partition;

    let chars = text.trim().chars().count();
    let evidence = (chars as f64 / (2 * MIN_EVIDENCE_CHARS) as f64).min(1.0);
    LanguageGuess {
        lang: model.profiles[best].lang.to_string(),
        confidence: (posterior * evidence).clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REVISED_PROMPT: &str = include_str!("../../prompts/revised.txt");

    const DUTCH: &str = "Amsterdam is de hoofdstad van Nederland en met ruim negenhonderdduizend \
        inwoners ook de grootste gemeente van het land. De stad is bekend om haar grachten, die in \
        de zeventiende eeuw werden aangelegd en sinds 2010 op de Werelderfgoedlijst van UNESCO staan. \
        In de Gouden Eeuw groeide Amsterdam uit tot een van de belangrijkste handelssteden ter \
        wereld. Tegenwoordig trekt de stad jaarlijks miljoenen toeristen, die onder meer het \
        Rijksmuseum, het Van Gogh Museum en het Anne Frank Huis bezoeken.";

    #[test]
    fn english_prompt_is_english() {
        let g = detect_language(REVISED_PROMPT);
        assert_eq!(g.lang, "en");
        assert!(g.confidence >= 0.9, "{g:?}");
    }

    #[test]
    fn dutch_paragraph_is_dutch() {
        let g = detect_language(DUTCH);
        assert_eq!(g.lang, "nl");
        assert!(g.confidence >= 0.8, "{g:?}");
    }

    #[test]
    fn other_languages() {
        let de = detect_language("Die Kinder spielen im Garten, während die Eltern in der Küche das Abendessen vorbereiten.");
        assert_eq!(de.lang, "de");
        let fr = detect_language("Les enfants jouent dans le jardin pendant que les parents préparent le dîner dans la cuisine.");
        assert_eq!(fr.lang, "fr");
        let es = detect_language("Los niños juegan en el jardín mientras los padres preparan la cena en la cocina.");
        assert_eq!(es.lang, "es");
    }

    #[test]
    fn short_text_has_low_confidence() {
        assert!(detect_language("de").confidence <= 0.5);
        assert!(detect_language("Based on the Windsor Statements.").confidence <= 0.5);
        let s = "x".repeat(MIN_EVIDENCE_CHARS - 1);
        assert!(detect_language(&s).confidence <= 0.5);
    }

    #[test]
    fn no_letters_is_undetermined() {
        let g = detect_language("75 % 2024");
        assert_eq!(g.lang, "und");
        assert_eq!(g.confidence, 0.0);
    }

    #[test]
    fn sentence_order_does_not_matter() {
        let a = "We planted trees by the river. The council restored the wetlands. Volunteers counted birds.";
        let b = "Volunteers counted birds. We planted trees by the river. The council restored the wetlands.";
        let (ga, gb) = (detect_language(a), detect_language(b));
        assert_eq!(ga.lang, gb.lang);
        assert!((ga.confidence - gb.confidence).abs() < 1e-12);
    }
}
