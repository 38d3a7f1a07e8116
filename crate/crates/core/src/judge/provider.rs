use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use reqwest::blocking::{Client, RequestBuilder, Response};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::batch::{BatchFile, BatchFormat, CHAT_COMPLETIONS};
use super::stub::stub_response;
use crate::hash::sha256_hex;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("environment variable {0} is not set")]
    MissingKey(&'static str),
    #[error("authentication rejected (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("rate limit or quota exceeded: {0}")]
    Quota(String),
    #[error("HTTP {status} from {url}: {body}")]
    Http { status: u16, url: String, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("batch {batch_id} ended with status `{status}`")]
    BatchFailed { batch_id: String, status: String },
    #[error("batch {batch_id} still `{status}` after waiting; rerun with --resume")]
    TimedOut { batch_id: String, status: String },
    #[error("job state {path}: {message}")]
    State { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProviderKind {
    OpenAiBatch,
    GroqBatch,
    Stub,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::OpenAiBatch => "openai-batch",
            ProviderKind::GroqBatch => "groq-batch",
            ProviderKind::Stub => "stub",
        }
    }

    pub fn format(self) -> BatchFormat {
        match self {
            ProviderKind::GroqBatch => BatchFormat::Groq,
            _ => BatchFormat::OpenAi,
        }
    }

    pub fn default_base_url(self) -> &'static str {
        match self {
            ProviderKind::OpenAiBatch => "https://api.openai.com/v1",
            ProviderKind::GroqBatch => "https://api.groq.com/openai/v1",
            ProviderKind::Stub => "",
        }
    }

    pub fn key_env(self) -> Option<&'static str> {
        match self {
            ProviderKind::OpenAiBatch => Some("OPENAI_API_KEY"),
            ProviderKind::GroqBatch => Some("GROQ_API_KEY"),
            ProviderKind::Stub => None,
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openai-batch" | "openai" => Ok(ProviderKind::OpenAiBatch),
            "groq-batch" | "groq" => Ok(ProviderKind::GroqBatch),
            "stub" => Ok(ProviderKind::Stub),
            other => Err(format!("unknown provider `{other}` (expected openai-batch, groq-batch or stub)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResultEntry {
    /// Assistant message content.
    Content(String),
    /// Provider-side error for this request, as returned.
    Error(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchResults {
    pub entries: HashMap<String, ResultEntry>,
    /// Result lines as downloaded, for mirroring to disk.
    pub raw_lines: Vec<String>,
}

impl BatchResults {
    /// Parses provider output lines; unparseable lines are kept in
    /// `raw_lines` only.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut out = BatchResults::default();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            out.raw_lines.push(line.to_string());
            let Ok(v) = serde_json::from_str::<Value>(line) else { continue };
            let Some(id) = v["custom_id"].as_str() else { continue };
            let content = v["response"]["body"]["choices"][0]["message"]["content"].as_str();
            let status = v["response"]["status_code"].as_u64().unwrap_or(200);
            let entry = match content {
                Some(c) if status == 200 => ResultEntry::Content(c.to_string()),
                _ => ResultEntry::Error(line.to_string()),
            };
            out.entries.insert(id.to_string(), entry);
        }
        out
    }
}

/// Something that turns a batch of requests into per-request results.
pub trait BatchProvider: Sync {
    fn kind(&self) -> ProviderKind;

    /// `job` names the batch for resumable state (e.g. `<model>/<ngo>`).
    fn run(&self, batch: &BatchFile, job: &str) -> Result<BatchResults, ProviderError>;
}

/// Offline provider answering from the built-in term list.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubProvider;

impl BatchProvider for StubProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Stub
    }

    fn run(&self, batch: &BatchFile, _job: &str) -> Result<BatchResults, ProviderError> {
        let lines: Vec<String> = batch
            .requests
            .iter()
            .map(|r| {
                json!({
                    "custom_id": r.sentence_id,
                    "response": {"status_code": 200, "body": {
                        "model": r.model_id,
                        "choices": [{"index": 0, "message": {"role": "assistant", "content": stub_response(&r.user_text)}}],
                    }},
                    "error": null,
                })
                .to_string()
            })
            .collect();
        Ok(BatchResults::from_lines(lines.iter().map(String::as_str)))
    }
}

/// Progress of one remote batch job, persisted so interrupted runs resume
/// without re-uploading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobState {
    pub input_sha256: String,
    pub input_file_id: Option<String>,
    pub batch_id: Option<String>,
    pub status: Option<String>,
    pub output_file_id: Option<String>,
    pub error_file_id: Option<String>,
}

/// OpenAI-compatible Files + Batches client (OpenAI, Groq).
pub struct HttpBatchProvider {
    kind: ProviderKind,
    base_url: String,
    api_key: String,
    client: Client,
    pub poll_interval: Duration,
    pub max_wait: Duration,
    pub state_dir: Option<PathBuf>,
}

impl HttpBatchProvider {
    /// Reads the API key from the provider's environment variable.
    pub fn from_env(kind: ProviderKind, base_url: Option<&str>) -> Result<Self, ProviderError> {
        let env = kind.key_env().ok_or_else(|| ProviderError::Protocol("stub has no HTTP client".into()))?;
        let key = std::env::var(env).ok().filter(|k| !k.trim().is_empty()).ok_or(ProviderError::MissingKey(env))?;
        Self::new(kind, base_url.unwrap_or(kind.default_base_url()), &key)
    }

    pub fn new(kind: ProviderKind, base_url: &str, api_key: &str) -> Result<Self, ProviderError> {
        crate::harvest::install_crypto_provider();
        let mut builder = Client::builder().timeout(Duration::from_secs(120));
        if let Ok(proxy) = std::env::var(crate::harvest::PROXY_ENV) {
            if !proxy.trim().is_empty() {
                builder = builder.proxy(reqwest::Proxy::all(proxy.trim()).map_err(net)?);
            }
        }
        Ok(Self {
            kind,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.trim().to_string(),
            client: builder.build().map_err(net)?,
            poll_interval: Duration::from_secs(30),
            max_wait: Duration::from_secs(24 * 3600),
            state_dir: None,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }

    fn send(&self, req: RequestBuilder, url: &str) -> Result<Response, ProviderError> {
        let resp = req.bearer_auth(&self.api_key).send().map_err(net)?;
        let status = resp.status().as_u16();
        if resp.status().is_success() {
            return Ok(resp);
        }
        let body = resp.text().unwrap_or_default();
        Err(match status {
            401 | 403 => ProviderError::Auth { status, body },
            429 => ProviderError::Quota(body),
            _ => ProviderError::Http { status, url: url.to_string(), body },
        })
    }

    fn send_json(&self, req: RequestBuilder, url: &str) -> Result<Value, ProviderError> {
        let text = self.send(req, url)?.text().map_err(net)?;
        serde_json::from_str(&text).map_err(|e| ProviderError::Protocol(format!("{url}: {e}")))
    }

    fn upload(&self, jsonl: &str, sha: &str) -> Result<String, ProviderError> {
        let boundary = format!("sacreddetect-{}", &sha[..16]);
        let mut body = Vec::with_capacity(jsonl.len() + 512);
        body.extend_from_slice(
            format!("--{boundary}\r\nContent-Disposition: form-data; name=\"purpose\"\r\n\r\nbatch\r\n").as_bytes(),
        );
        body.extend_from_slice(
            format!(
                "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"batch.jsonl\"\r\n\
                 Content-Type: application/jsonl\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(jsonl.as_bytes());
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        let url = self.url("/files");
        let req = self
            .client
            .post(&url)
            .header(reqwest::header::CONTENT_TYPE, format!("multipart/form-data; boundary={boundary}"))
            .body(body);
        id_of(&self.send_json(req, &url)?, &url)
    }

    fn create(&self, file_id: &str) -> Result<String, ProviderError> {
        let url = self.url("/batches");
        let req = self.client.post(&url).json(&json!({
            "input_file_id": file_id,
            "endpoint": CHAT_COMPLETIONS,
            "completion_window": "24h",
        }));
        id_of(&self.send_json(req, &url)?, &url)
    }

    fn download(&self, file_id: &str) -> Result<String, ProviderError> {
        let url = self.url(&format!("/files/{file_id}/content"));
        self.send(self.client.get(&url), &url)?.text().map_err(net)
    }

    fn state_path(&self, job: &str) -> Option<PathBuf> {
        let name: String = job.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
        self.state_dir.as_ref().map(|d| d.join(format!("{name}.job.json")))
    }
}

fn net(e: reqwest::Error) -> ProviderError {
    ProviderError::Network(e.to_string())
}

fn id_of(v: &Value, url: &str) -> Result<String, ProviderError> {
    v["id"].as_str().map(str::to_string).ok_or_else(|| ProviderError::Protocol(format!("{url}: response has no id")))
}

fn load_state(path: &Path) -> Result<Option<JobState>, ProviderError> {
    match std::fs::read_to_string(path) {
        Ok(s) => serde_json::from_str(&s)
            .map(Some)
            .map_err(|e| ProviderError::State { path: path.display().to_string(), message: e.to_string() }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(ProviderError::State { path: path.display().to_string(), message: e.to_string() }),
    }
}

fn save_state(path: Option<&Path>, state: &JobState) -> Result<(), ProviderError> {
    let Some(path) = path else { return Ok(()) };
    let err = |e: std::io::Error| ProviderError::State { path: path.display().to_string(), message: e.to_string() };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(state).expect("state serializes")).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

impl BatchProvider for HttpBatchProvider {
    fn kind(&self) -> ProviderKind {
        self.kind
    }

    fn run(&self, batch: &BatchFile, job: &str) -> Result<BatchResults, ProviderError> {
        let jsonl = batch.to_jsonl(self.kind.format());
        let sha = sha256_hex(jsonl.as_bytes());
        let path = self.state_path(job);
        let mut state = match path.as_deref().map(load_state).transpose()?.flatten() {
            Some(s) if s.input_sha256 == sha => s,
            _ => JobState { input_sha256: sha.clone(), ..JobState::default() },
        };

        if state.input_file_id.is_none() {
            state.input_file_id = Some(self.upload(&jsonl, &sha)?);
            save_state(path.as_deref(), &state)?;
        }
        if state.batch_id.is_none() {
            state.batch_id = Some(self.create(state.input_file_id.as_deref().unwrap())?);
            save_state(path.as_deref(), &state)?;
        }
        let batch_id = state.batch_id.clone().unwrap();
        let started = Instant::now();
        loop {
            let url = self.url(&format!("/batches/{batch_id}"));
            let v = self.send_json(self.client.get(&url), &url)?;
            let status = v["status"].as_str().unwrap_or("unknown").to_string();
            state.output_file_id = v["output_file_id"].as_str().map(str::to_string);
            state.error_file_id = v["error_file_id"].as_str().map(str::to_string);
            let changed = state.status.as_deref() != Some(status.as_str());
            state.status = Some(status.clone());
            if changed {
                log::info!("batch {batch_id}: {status}");
                save_state(path.as_deref(), &state)?;
            }
            match status.as_str() {
                "completed" => break,
                "expired" | "cancelled" if state.output_file_id.is_some() || state.error_file_id.is_some() => break,
                "failed" | "expired" | "cancelled" => return Err(ProviderError::BatchFailed { batch_id, status }),
                _ => {}
            }
            if started.elapsed() >= self.max_wait {
                return Err(ProviderError::TimedOut { batch_id, status });
            }
            std::thread::sleep(self.poll_interval);
        }

        let mut text = String::new();
        for id in [&state.output_file_id, &state.error_file_id].into_iter().flatten() {
            text.push_str(&self.download(id)?);
            text.push('\n');
        }
        Ok(BatchResults::from_lines(text.lines()))
    }
}
