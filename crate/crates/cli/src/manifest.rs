//! Per-directory run manifests and input fingerprints.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sacreddetect_core::hash::{sha256_hex, sha256_parts};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST: &str = "manifest.json";
pub const TOOL_VERSION: &str = concat!("sacreddetect ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub tool_version: String,
    /// Hash of stage, tool version, inputs and params.
    pub fingerprint: String,
    /// Upstream directory → content hash.
    pub inputs: BTreeMap<String, String>,
    /// Splitter, lexicon, prompt, provider and decoding settings.
    pub params: BTreeMap<String, Value>,
    /// Files written by the stage (relative path → sha256).
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn fingerprint(stage: &str, inputs: &BTreeMap<String, String>, params: &BTreeMap<String, Value>) -> String {
    let inputs = serde_json::to_string(inputs).expect("serializable");
    let params = serde_json::to_string(params).expect("serializable");
    sha256_parts([stage.as_bytes(), TOOL_VERSION.as_bytes(), inputs.as_bytes(), params.as_bytes()])
}

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// sha256 of every file under `dir` except manifests and lock files.
pub fn hash_files(dir: &Path) -> io::Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    if dir.is_dir() {
        walk(dir, &mut files)?;
    }
    let mut out = BTreeMap::new();
    for f in files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name == MANIFEST || name.ends_with(".tmp") || name.ends_with(".lock") {
            continue;
        }
        out.insert(rel(dir, &f), sha256_hex(&fs::read(&f)?));
    }
    Ok(out)
}

/// Hash of the listed files' paths and contents.
pub fn hash_listing(files: &BTreeMap<String, String>) -> String {
    sha256_hex(serde_json::to_string(files).expect("serializable").as_bytes())
}

/// Content hash of a directory tree (manifests excluded).
pub fn hash_dir(dir: &Path) -> io::Result<String> {
    Ok(hash_listing(&hash_files(dir)?))
}

pub fn load(dir: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST)).ok()?;
    serde_json::from_str(&text).ok()
}

/// True when `dir` holds a manifest with this fingerprint and every
/// recorded output still hashes the same.
pub fn is_current(dir: &Path, fingerprint: &str) -> bool {
    let Some(m) = load(dir) else { return false };
    m.fingerprint == fingerprint
        && m.outputs.iter().all(|(path, hash)| {
            fs::read(dir.join(path)).map(|b| &sha256_hex(&b) == hash).unwrap_or(false)
        })
}

pub fn remove(dir: &Path) -> io::Result<()> {
    match fs::remove_file(dir.join(MANIFEST)) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

/// Writes the manifest atomically; called after every output is in place.
pub fn write(dir: &Path, manifest: &RunManifest) -> io::Result<()> {
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(manifest).expect("serializable") + "\n")?;
    fs::rename(tmp, dir.join(MANIFEST))
}

/// Hashes of just `paths` (relative to `dir`).
pub fn hash_outputs(dir: &Path, paths: &[PathBuf]) -> io::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for p in paths {
        out.insert(rel(dir, p), sha256_hex(&fs::read(p)?));
    }
    Ok(out)
}
