use serde::{Deserialize, Serialize};

use super::{detect_language, extract_main_text, normalize_whitespace, CleanDocument};
use crate::harvest::RawDocument;

/// Why a raw document produced no clean text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    FetchFailed,
    HumanVerification,
    Pdf,
    UnsupportedType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cleaned {
    Doc { doc: CleanDocument, replacement_chars: usize },
    Skipped(SkipReason),
}

/// HTML goes through main-content extraction; plain text is kept line by
/// line with whitespace collapsed. PDFs are stored upstream but not read.
pub fn clean_document(raw: &RawDocument) -> Cleaned {
    if raw.is_failure() {
        return Cleaned::Skipped(SkipReason::FetchFailed);
    }
    if raw.note.as_deref() == Some(crate::harvest::HUMAN_VERIFICATION) {
        return Cleaned::Skipped(SkipReason::HumanVerification);
    }
    let mime = raw.mime();
    let (text, replacement_chars) = match mime.as_str() {
        "text/html" | "application/xhtml+xml" | "" => {
            let e = extract_main_text(&raw.body);
            (e.text, e.replacement_chars)
        }
        "text/plain" => {
            let s = String::from_utf8_lossy(&raw.body);
            let introduced = match std::str::from_utf8(&raw.body) {
                Ok(_) => 0,
                Err(_) => s.matches('\u{FFFD}').count(),
            };
            let lines: Vec<String> = s.lines().map(normalize_whitespace).filter(|l| !l.is_empty()).collect();
            (lines.join("\n"), introduced)
        }
        "application/pdf" => return Cleaned::Skipped(SkipReason::Pdf),
        _ => return Cleaned::Skipped(SkipReason::UnsupportedType),
    };
    let guess = detect_language(&text);
    Cleaned::Doc {
        doc: CleanDocument {
            doc_id: raw.doc_id.clone(),
            ngo_id: raw.ngo_id.clone(),
            text,
            lang: guess.lang,
            lang_confidence: guess.confidence,
        },
        replacement_chars,
    }
}
