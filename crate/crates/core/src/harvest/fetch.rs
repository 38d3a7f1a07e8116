use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, Once};
use std::thread;
use std::time::{Duration, Instant};

use chrono::Utc;
use log::{debug, info, warn};
use reqwest::blocking::Client;
use url::Url;

use super::store::is_failure_status;
use super::worklist::WorkItem;
use super::{DocumentStore, RawDocument, RobotsRules, StoreError};

/// Environment variable naming an optional HTTP(S) proxy for live fetches.
pub const PROXY_ENV: &str = "SACREDDETECT_PROXY";

/// Note attached to documents that turned out to be bot-check pages.
pub const HUMAN_VERIFICATION: &str = "human-verification";

const CHALLENGE_MARKERS: &[&str] = &[
    "verify you are human",
    "human verification",
    "are you a robot",
    "cf-challenge",
    "challenge-platform",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FetchPolicy {
    /// Maximum requests per second to a single host.
    pub rate: f64,
    /// Extra attempts after the first on timeouts, 429 and 5xx.
    pub retries: u32,
    pub timeout: Duration,
    /// First retry waits this long; each further retry doubles it.
    pub backoff_base: Duration,
    pub user_agent: String,
    pub respect_robots: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            rate: 1.0,
            retries: 3,
            timeout: Duration::from_secs(30),
            backoff_base: Duration::from_millis(500),
            user_agent: concat!("sacreddetect/", env!("CARGO_PKG_VERSION")).to_string(),
            respect_robots: true,
        }
    }
}

impl FetchPolicy {
    fn min_interval(&self) -> Duration {
        if self.rate > 0.0 {
            Duration::from_secs_f64(1.0 / self.rate)
        } else {
            Duration::ZERO
        }
    }
}

#[derive(Debug, Default)]
struct HostState {
    last_request: Option<Instant>,
    robots: Option<RobotsRules>,
    blocked: bool,
}

/// Per-host counters for one harvest.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct HostReport {
    pub fetched: usize,
    pub failed: usize,
    pub skipped_robots: usize,
    pub skipped_blocked: usize,
    pub human_verification: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct HarvestOutcome {
    pub fetched: usize,
    pub failed: usize,
    pub skipped_existing: usize,
    pub hosts: BTreeMap<String, HostReport>,
}

impl HarvestOutcome {
    pub fn skipped_robots(&self) -> usize {
        self.hosts.values().map(|h| h.skipped_robots).sum()
    }

    pub fn skipped_blocked(&self) -> usize {
        self.hosts.values().map(|h| h.skipped_blocked).sum()
    }
}

/// Polite HTTP fetcher: requests to one host are serialized and spaced by
/// the policy rate; different hosts proceed independently.
pub struct Fetcher {
    client: Client,
    policy: FetchPolicy,
    hosts: Mutex<HashMap<String, Arc<Mutex<HostState>>>>,
}

pub(crate) fn install_crypto_provider() {
    static INSTALL: Once = Once::new();
    INSTALL.call_once(|| {
        let _ = rustls::crypto::ring::default_provider().install_default();
    });
}

impl Fetcher {
    pub fn new(policy: FetchPolicy) -> reqwest::Result<Self> {
        install_crypto_provider();
        let mut builder = Client::builder()
            .timeout(policy.timeout)
            .user_agent(policy.user_agent.clone());
        if let Ok(proxy) = std::env::var(PROXY_ENV) {
            if !proxy.trim().is_empty() {
                builder = builder.proxy(reqwest::Proxy::all(proxy.trim())?);
            }
        }
        Ok(Self { client: builder.build()?, policy, hosts: Mutex::new(HashMap::new()) })
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    fn host_state(&self, host: &str) -> Arc<Mutex<HostState>> {
        let mut hosts = self.hosts.lock().expect("host table poisoned");
        hosts.entry(host.to_string()).or_default().clone()
    }

    fn wait_turn(&self, state: &mut HostState) {
        if let Some(last) = state.last_request {
            let due = last + self.policy.min_interval();
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        state.last_request = Some(Instant::now());
    }

    /// Fetches one URL with retries. Never fails: errors become a
    /// document with a failure status (`0` when no response arrived).
    pub fn fetch_document(&self, ngo_id: &str, url: &str) -> RawDocument {
        let host = host_key(url);
        let state = self.host_state(&host);
        let mut state = state.lock().expect("host state poisoned");
        self.fetch_locked(&mut state, ngo_id, url)
    }

    fn fetch_locked(&self, state: &mut HostState, ngo_id: &str, url: &str) -> RawDocument {
        let mut attempt = 0u32;
        loop {
            self.wait_turn(state);
            let result = self.client.get(url).send().and_then(|resp| {
                let status = resp.status().as_u16();
                let ctype = resp
                    .headers()
                    .get(reqwest::header::CONTENT_TYPE)
                    .and_then(|v| v.to_str().ok())
                    .unwrap_or("")
                    .to_string();
                let body = resp.bytes()?.to_vec();
                Ok((status, ctype, body))
            });
            let retryable = match &result {
                Ok((status, _, _)) => *status == 429 || *status >= 500,
                Err(e) => e.is_timeout() || e.is_connect() || e.is_request() || e.is_body(),
            };
            if retryable && attempt < self.policy.retries {
                let backoff = self.policy.backoff_base * 2u32.saturating_pow(attempt);
                debug!("retrying {url} in {backoff:?} (attempt {})", attempt + 1);
                thread::sleep(backoff);
                attempt += 1;
                continue;
            }
            return match result {
                Ok((status, ctype, body)) => {
                    let challenge = looks_like_challenge(&body);
                    let body = if is_failure_status(status) { Vec::new() } else { body };
                    let mut doc = RawDocument::new(ngo_id, url, status, &ctype, body, Utc::now());
                    if challenge {
                        doc.note = Some(HUMAN_VERIFICATION.into());
                    }
                    doc
                }
                Err(e) => {
                    let mut doc = RawDocument::new(ngo_id, url, 0, "", Vec::new(), Utc::now());
                    doc.note = Some(format!("network error: {e}"));
                    doc
                }
            };
        }
    }

    fn robots_for(&self, state: &mut HostState, origin: &str) -> RobotsRules {
        if let Some(rules) = &state.robots {
            return rules.clone();
        }
        let robots_url = format!("{origin}/robots.txt");
        self.wait_turn(state);
        let rules = match self.client.get(&robots_url).send() {
            Ok(resp) if resp.status().is_success() => resp
                .text()
                .map(|t| RobotsRules::parse(&t, &self.policy.user_agent))
                .unwrap_or_default(),
            _ => RobotsRules::allow_all(),
        };
        state.robots = Some(rules.clone());
        rules
    }

    /// Fetches every worklist URL not yet in `store`, one worker per host.
    pub fn harvest(
        &self,
        ngo_id: &str,
        items: &[WorkItem],
        store: &mut DocumentStore,
    ) -> Result<HarvestOutcome, StoreError> {
        let mut all = self.harvest_all(&[(ngo_id, items)], store)?;
        Ok(all.remove(ngo_id).unwrap_or_default())
    }

    /// Harvests several NGOs at once. Hosts proceed in parallel; each
    /// host's URLs are fetched serially in worklist order.
    pub fn harvest_all(
        &self,
        jobs: &[(&str, &[WorkItem])],
        store: &mut DocumentStore,
    ) -> Result<BTreeMap<String, HarvestOutcome>, StoreError> {
        let mut outcomes: BTreeMap<String, HarvestOutcome> = BTreeMap::new();
        let mut by_host: BTreeMap<String, Vec<(&str, &WorkItem)>> = BTreeMap::new();
        for (ngo_id, items) in jobs {
            let outcome = outcomes.entry(ngo_id.to_string()).or_default();
            for item in items.iter() {
                if store.contains(&item.url) {
                    outcome.skipped_existing += 1;
                } else {
                    by_host.entry(host_key(&item.url)).or_default().push((ngo_id, item));
                }
            }
        }

        let store = Mutex::new(store);
        let results: Vec<(String, BTreeMap<String, HostReport>, Option<StoreError>)> = thread::scope(|scope| {
            let handles: Vec<_> = by_host
                .iter()
                .map(|(host, items)| {
                    let store = &store;
                    scope.spawn(move || {
                        let (reports, err) = self.harvest_host(items, store);
                        (host.clone(), reports, err)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("host worker panicked")).collect()
        });

        for (host, reports, err) in results {
            if let Some(err) = err {
                return Err(err);
            }
            for (ngo_id, report) in reports {
                let outcome = outcomes.entry(ngo_id).or_default();
                outcome.fetched += report.fetched;
                outcome.failed += report.failed;
                outcome.hosts.insert(host.clone(), report);
            }
        }
        for (ngo_id, outcome) in &outcomes {
            info!(
                "{ngo_id}: fetched {} failed {} existing {} robots {} blocked {}",
                outcome.fetched,
                outcome.failed,
                outcome.skipped_existing,
                outcome.skipped_robots(),
                outcome.skipped_blocked()
            );
        }
        Ok(outcomes)
    }

    fn harvest_host(
        &self,
        items: &[(&str, &WorkItem)],
        store: &Mutex<&mut DocumentStore>,
    ) -> (BTreeMap<String, HostReport>, Option<StoreError>) {
        let mut reports: BTreeMap<String, HostReport> = BTreeMap::new();
        let Some((_, first)) = items.first() else { return (reports, None) };
        let state = self.host_state(&host_key(&first.url));
        let mut state = state.lock().expect("host state poisoned");

        for (ngo_id, item) in items {
            let report = reports.entry(ngo_id.to_string()).or_default();
            if state.blocked {
                report.skipped_blocked += 1;
                continue;
            }
            if self.policy.respect_robots {
                let (origin, path) = origin_and_path(&item.url);
                if !self.robots_for(&mut state, &origin).is_allowed(&path) {
                    report.skipped_robots += 1;
                    continue;
                }
            }
            let mut doc = self.fetch_locked(&mut state, ngo_id, &item.url);
            doc.snapshot_timestamp = Some(item.snapshot_timestamp.clone());
            if doc.note.as_deref() == Some(HUMAN_VERIFICATION) {
                warn!("{}: human-verification page, skipping remaining URLs of host", item.url);
                state.blocked = true;
                report.human_verification = true;
            }
            if doc.is_failure() {
                report.failed += 1;
            } else {
                report.fetched += 1;
            }
            if let Err(e) = store.lock().expect("store poisoned").append(&doc) {
                return (reports, Some(e));
            }
        }
        (reports, None)
    }
}

/// One-shot fetch of a single URL under `policy` (no robots check).
pub fn fetch_live(url: &str, policy: &FetchPolicy) -> RawDocument {
    match Fetcher::new(policy.clone()) {
        Ok(f) => f.fetch_document("", url),
        Err(e) => {
            let mut doc = RawDocument::new("", url, 0, "", Vec::new(), Utc::now());
            doc.note = Some(format!("client error: {e}"));
            doc
        }
    }
}

fn looks_like_challenge(body: &[u8]) -> bool {
    let text = String::from_utf8_lossy(body).to_lowercase();
    CHALLENGE_MARKERS.iter().any(|m| text.contains(m))
}

fn host_key(url: &str) -> String {
    Url::parse(url)
        .ok()
        .and_then(|u| {
            let host = u.host_str()?.to_string();
            Some(match u.port() {
                Some(p) => format!("{host}:{p}"),
                None => host,
            })
        })
        .unwrap_or_default()
}

fn origin_and_path(url: &str) -> (String, String) {
    match Url::parse(url) {
        Ok(u) => {
            let origin = u.origin().ascii_serialization();
            let mut path = u.path().to_string();
            if let Some(q) = u.query() {
                path.push('?');
                path.push_str(q);
            }
            (origin, path)
        }
        Err(_) => (String::new(), "/".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_key_includes_port() {
        assert_eq!(host_key("http://127.0.0.1:8080/a"), "127.0.0.1:8080");
        assert_eq!(host_key("https://A.org/x"), "a.org");
    }

    #[test]
    fn origin_split_keeps_query() {
        assert_eq!(
            origin_and_path("https://ienearth.org/?p=2075"),
            ("https://ienearth.org".to_string(), "/?p=2075".to_string())
        );
    }

    #[test]
    fn challenge_detection() {
        assert!(!looks_like_challenge(b""));
        assert!(looks_like_challenge(b"<title>Just a moment</title><div id=cf-challenge>"));
        assert!(!looks_like_challenge(b"<p>An ordinary page about forests.</p>"));
    }
}
