//! TOML pipeline configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sacreddetect_core::harvest::{FetchPolicy, Group, SourceSpec};
use sacreddetect_core::judge::{ProviderKind, TemplateId};
use sacreddetect_core::lexicon::{load_lexicon, starter_lexicon, Lexicon, STARTER_LEXICON};
use serde::Deserialize;
use thiserror::Error;

/// The bundled nine-NGO configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../../../config/default.toml");

pub const BUILTIN_STARTER: &str = "builtin:starter";

#[derive(Debug, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_root: Option<String>,
    lexicon: String,
    #[serde(default = "default_template")]
    template: String,
    #[serde(default)]
    terms: Vec<String>,
    #[serde(default)]
    fetch: RawFetch,
    #[serde(default)]
    models: Vec<RawModel>,
    sources: Vec<RawSource>,
}

fn default_template() -> String {
    "revised".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFetch {
    #[serde(default = "one")]
    rate: f64,
    #[serde(default = "three")]
    retries: u32,
    #[serde(default = "thirty")]
    timeout_secs: u64,
    #[serde(default = "yes")]
    respect_robots: bool,
    user_agent: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn three() -> u32 {
    3
}
fn thirty() -> u64 {
    30
}
fn yes() -> bool {
    true
}

impl Default for RawFetch {
    fn default() -> Self {
        Self { rate: 1.0, retries: 3, timeout_secs: 30, respect_robots: true, user_agent: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    model_id: String,
    provider: String,
    base_url: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    ngo_id: String,
    group: String,
    base_url: String,
    from_year: i32,
    to_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconSource {
    Builtin,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model_id: String,
    pub provider: ProviderKind,
    pub base_url: Option<String>,
}

impl ModelConfig {
    /// Directory name for this model's batches and labels.
    pub fn dir_name(&self) -> String {
        model_dir_name(&self.model_id)
    }
}

pub fn model_dir_name(model_id: &str) -> String {
    model_id.chars().map(|c| if c.is_ascii_alphanumeric() || "-._".contains(c) { c } else { '_' }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sources: Vec<SourceSpec>,
    pub lexicon: LexiconSource,
    pub template: TemplateId,
    pub terms: Vec<String>,
    pub models: Vec<ModelConfig>,
    pub fetch: FetchPolicy,
    pub output_root: PathBuf,
}

impl PipelineConfig {
    pub fn group_of(&self, ngo_id: &str) -> Option<Group> {
        self.sources.iter().find(|s| s.ngo_id == ngo_id).map(|s| s.group)
    }

    pub fn ngo_groups(&self) -> Vec<(String, Group)> {
        self.sources.iter().map(|s| (s.ngo_id.clone(), s.group)).collect()
    }

    pub fn load_lexicon(&self) -> Result<Lexicon, ConfigError> {
        match &self.lexicon {
            LexiconSource::Builtin => Ok(starter_lexicon()),
            LexiconSource::File(p) => load_lexicon(p).map(|(l, _)| l).map_err(|e| err("lexicon", e.to_string())),
        }
    }

    /// Bytes identifying the lexicon, for fingerprints.
    pub fn lexicon_text(&self) -> Result<String, ConfigError> {
        match &self.lexicon {
            LexiconSource::Builtin => Ok(STARTER_LEXICON.to_string()),
            LexiconSource::File(p) => {
                std::fs::read_to_string(p).map_err(|e| err("lexicon", format!("{}: {e}", p.display())))
            }
        }
    }
}

/// Reads and checks a config file; relative paths resolve against its
/// directory.
pub fn validate_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(path.display().to_string(), e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<PipelineConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = e.span().map(|s| format!("at byte {}", s.start)).unwrap_or_else(|| "config".into());
        err(field, msg)
    })?;

    let mut sources = Vec::new();
    let mut seen = HashSet::new();
    for (i, s) in raw.sources.iter().enumerate() {
        let field = format!("sources[{i}]");
        let group: Group = s.group.parse().map_err(|e: sacreddetect_core::harvest::SourceError| err(format!("{field}.group"), e.to_string()))?;
        let spec = SourceSpec {
            ngo_id: s.ngo_id.clone(),
            group,
            base_url: s.base_url.clone(),
            from_year: s.from_year,
            to_year: s.to_year,
        };
        spec.validate().map_err(|e| err(&field, e.to_string()))?;
        if !s.ngo_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
            return Err(err(format!("{field}.ngo_id"), "use letters, digits, `-` or `_`"));
        }
        if !seen.insert(s.ngo_id.clone()) {
            return Err(err(format!("{field}.ngo_id"), format!("duplicate ngo_id `{}`", s.ngo_id)));
        }
        sources.push(spec);
    }
    if sources.is_empty() {
        return Err(err("sources", "at least one source is required"));
    }

    let lexicon = if raw.lexicon == BUILTIN_STARTER {
        LexiconSource::Builtin
    } else {
        let p = base_dir.join(&raw.lexicon);
        if !p.is_file() {
            return Err(err("lexicon", format!("file not found: {}", p.display())));
        }
        LexiconSource::File(p)
    };

    let template: TemplateId = raw.template.parse().map_err(|e: sacreddetect_core::judge::JudgeError| err("template", e.to_string()))?;

    let mut models = Vec::new();
    let mut seen = HashSet::new();
    for (i, m) in raw.models.iter().enumerate() {
        let field = format!("models[{i}]");
        if m.model_id.trim().is_empty() {
            return Err(err(format!("{field}.model_id"), "must be non-empty"));
        }
        if model_dir_name(&m.model_id) == "tree" {
            return Err(err(format!("{field}.model_id"), "`tree` is reserved"));
        }
        if !seen.insert(model_dir_name(&m.model_id)) {
            return Err(err(format!("{field}.model_id"), format!("duplicate model `{}`", m.model_id)));
        }
        let provider = m.provider.parse().map_err(|e: String| err(format!("{field}.provider"), e))?;
        models.push(ModelConfig { model_id: m.model_id.clone(), provider, base_url: m.base_url.clone() });
    }

    if raw.fetch.rate.is_nan() || raw.fetch.rate <= 0.0 || !raw.fetch.rate.is_finite() {
        return Err(err("fetch.rate", "must be a positive number"));
    }
    let mut fetch = FetchPolicy {
        rate: raw.fetch.rate,
        retries: raw.fetch.retries,
        timeout: Duration::from_secs(raw.fetch.timeout_secs.max(1)),
        respect_robots: raw.fetch.respect_robots,
        ..FetchPolicy::default()
    };
    if let Some(ua) = raw.fetch.user_agent {
        fetch.user_agent = ua;
    }

    for (i, t) in raw.terms.iter().enumerate() {
        if t.trim().is_empty() {
            return Err(err(format!("terms[{i}]"), "must be non-empty"));
        }
    }

    Ok(PipelineConfig {
        sources,
        lexicon,
        template,
        terms: raw.terms,
        models,
        fetch,
        output_root: base_dir.join(raw.output_root.unwrap_or_else(|| "out".into())),
    })
}
