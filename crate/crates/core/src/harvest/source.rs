use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether an NGO is a religious or secular organisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Religious,
    Secular,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Religious => "religious",
            Group::Secular => "secular",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "religious" => Ok(Group::Religious),
            "secular" => Ok(Group::Secular),
            other => Err(SourceError::UnknownGroup(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SourceError {
    #[error("unknown group `{0}` (expected `religious` or `secular`)")]
    UnknownGroup(String),
    #[error("ngo_id must be non-empty")]
    EmptyId,
    #[error("{ngo_id}: from_year {from} is after to_year {to}")]
    YearRange { ngo_id: String, from: i32, to: i32 },
    #[error("{ngo_id}: base_url `{url}` must not carry a scheme")]
    SchemePrefix { ngo_id: String, url: String },
    #[error("{ngo_id}: base_url must be non-empty")]
    EmptyUrl { ngo_id: String },
}

/// One harvested organisation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub ngo_id: String,
    pub group: Group,
    /// Host plus optional path, without scheme (e.g. `greenpeace.org`).
    pub base_url: String,
    pub from_year: i32,
    pub to_year: i32,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<(), SourceError> {
        if self.ngo_id.trim().is_empty() {
            return Err(SourceError::EmptyId);
        }
        if self.base_url.trim().is_empty() {
            return Err(SourceError::EmptyUrl { ngo_id: self.ngo_id.clone() });
        }
        if self.base_url.contains("://") {
            return Err(SourceError::SchemePrefix {
                ngo_id: self.ngo_id.clone(),
                url: self.base_url.clone(),
            });
        }
        if self.from_year > self.to_year {
            return Err(SourceError::YearRange {
                ngo_id: self.ngo_id.clone(),
                from: self.from_year,
                to: self.to_year,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(url: &str, from: i32, to: i32) -> SourceSpec {
        SourceSpec {
            ngo_id: "x".into(),
            group: Group::Secular,
            base_url: url.into(),
            from_year: from,
            to_year: to,
        }
    }

    #[test]
    fn rejects_inverted_years() {
        assert!(matches!(spec("a.org", 2024, 2014).validate(), Err(SourceError::YearRange { .. })));
        assert!(spec("a.org", 2020, 2020).validate().is_ok());
    }

    #[test]
    fn rejects_scheme() {
        assert!(matches!(
            spec("https://a.org", 2014, 2024).validate(),
            Err(SourceError::SchemePrefix { .. })
        ));
    }

    #[test]
    fn group_parses_exactly() {
        assert_eq!("secular".parse::<Group>().unwrap(), Group::Secular);
        assert!("Secular".parse::<Group>().is_err());
    }
}
