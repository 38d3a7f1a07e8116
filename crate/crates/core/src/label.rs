use std::fmt;

use serde::{Deserialize, Serialize};

/// A single classifier decision on one sentence.
///
/// The rule-based matcher only ever produces `Yes` or `No`; `Malformed`
/// is reserved for model output that failed the response schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
    Malformed,
}

impl Label {
    pub fn is_valid(self) -> bool {
        !matches!(self, Label::Malformed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "yes",
            Label::No => "no",
            Label::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
