use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::sha256_parts;

/// One fetched page (or the record of a failed fetch).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub ngo_id: String,
    pub url: String,
    pub fetched_at: DateTime<Utc>,
    pub content_type: String,
    /// HTTP status; `0` when no response was received.
    pub status: u16,
    #[serde(with = "base64_body")]
    pub body: Vec<u8>,
    /// CDX timestamp of the snapshot that listed this URL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RawDocument {
    pub fn new(
        ngo_id: &str,
        url: &str,
        status: u16,
        content_type: &str,
        body: Vec<u8>,
        fetched_at: DateTime<Utc>,
    ) -> Self {
        Self {
            doc_id: doc_id(url, &body),
            ngo_id: ngo_id.to_string(),
            url: url.to_string(),
            fetched_at,
            content_type: content_type.to_string(),
            status,
            body,
            snapshot_timestamp: None,
            note: None,
        }
    }

    pub fn is_failure(&self) -> bool {
        is_failure_status(self.status)
    }

    /// Media type without parameters, lowercased.
    pub fn mime(&self) -> String {
        self.content_type
            .split(';')
            .next()
            .unwrap_or("")
            .trim()
            .to_ascii_lowercase()
    }
}

pub(crate) fn is_failure_status(status: u16) -> bool {
    status == 0 || status >= 400
}

/// Deterministic in `(url, body)`: identical fetches share an id.
pub fn doc_id(url: &str, body: &[u8]) -> String {
    let mut h = sha256_parts([url.as_bytes(), body]);
    h.truncate(32);
    h
}

mod base64_body {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(body: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(body))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s.as_bytes()).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
}

/// `raw/<ngo_id>.jsonl` files plus `raw/index.json` (normalized URL → doc_id).
///
/// The JSONL files are the source of truth; the index is rebuilt from them
/// on open so that an interrupted harvest resumes cleanly.
#[derive(Debug)]
pub struct DocumentStore {
    dir: PathBuf,
    index: BTreeMap<String, String>,
}

impl DocumentStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        let mut store = Self { dir, index: BTreeMap::new() };
        for ngo in store.ngo_ids()? {
            for doc in store.load(&ngo)? {
                store.index.entry(doc.url).or_insert(doc.doc_id);
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn contains(&self, url: &str) -> bool {
        self.index.contains_key(url)
    }

    pub fn index(&self) -> &BTreeMap<String, String> {
        &self.index
    }

    pub fn path_for(&self, ngo_id: &str) -> PathBuf {
        self.dir.join(format!("{ngo_id}.jsonl"))
    }

    /// NGO ids with a document file, sorted.
    pub fn ngo_ids(&self) -> Result<Vec<String>, StoreError> {
        let io_err = |source| StoreError::Io { path: self.dir.clone(), source };
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn append(&mut self, doc: &RawDocument) -> Result<(), StoreError> {
        let path = self.path_for(&doc.ngo_id);
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?;
        let mut line = serde_json::to_string(doc).expect("RawDocument serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io_err)?;
        self.index.entry(doc.url.clone()).or_insert_with(|| doc.doc_id.clone());
        Ok(())
    }

    pub fn load(&self, ngo_id: &str) -> Result<Vec<RawDocument>, StoreError> {
        let path = self.path_for(ngo_id);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&path).map_err(|source| StoreError::Io { path: path.clone(), source })?;
        let mut docs = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| StoreError::Io { path: path.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let doc = serde_json::from_str(&line)
                .map_err(|source| StoreError::Json { path: path.clone(), line: i + 1, source })?;
            docs.push(doc);
        }
        Ok(docs)
    }

    pub fn write_index(&self) -> Result<(), StoreError> {
        let path = self.dir.join("index.json");
        let body = serde_json::to_string_pretty(&self.index).expect("index serializes");
        fs::write(&path, body).map_err(|source| StoreError::Io { path, source })
    }
}

/// Body encoding used in the store, exposed for fixtures.
pub fn encode_body(body: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(body)
}
