mod common;

use std::time::Duration;

use common::{Reply, TestServer};
use sacreddetect_core::harvest::{DocumentStore, FetchPolicy, Fetcher, WorkItem, HUMAN_VERIFICATION};

fn site() -> TestServer {
    TestServer::start(|req| match req.path.as_str() {
        "/robots.txt" => Reply::new(200, "text/plain", "User-agent: *\nDisallow: /private\n"),
        "/page" | "/other" => Reply::new(200, "text/html; charset=utf-8", "<html><body><p>Hello there.</p></body></html>"),
        "/flaky" => Reply::new(503, "text/plain", "busy"),
        "/check" => Reply::new(200, "text/html", "<h1>Please verify you are human</h1>"),
        _ => Reply::new(404, "text/plain", "not found"),
    })
}

fn policy(rate: f64) -> FetchPolicy {
    FetchPolicy { rate, retries: 1, timeout: Duration::from_secs(5), backoff_base: Duration::from_millis(10), ..FetchPolicy::default() }
}

fn item(url: String) -> WorkItem {
    WorkItem { url, snapshot_timestamp: "20200101000000".into(), mimetype: "text/html".into() }
}

#[test]
fn ok_and_not_found() {
    let server = site();
    let f = Fetcher::new(policy(100.0)).unwrap();
    let ok = f.fetch_document("n", &format!("{}/page", server.base));
    assert_eq!(ok.status, 200);
    assert!(!ok.body.is_empty());
    assert_eq!(ok.mime(), "text/html");
    assert!(!ok.is_failure());

    let missing = f.fetch_document("n", &format!("{}/gone", server.base));
    assert_eq!(missing.status, 404);
    assert!(missing.body.is_empty());
    assert!(missing.is_failure());
}

#[test]
fn retries_then_records_failure() {
    let server = site();
    let f = Fetcher::new(policy(100.0)).unwrap();
    let doc = f.fetch_document("n", &format!("{}/flaky", server.base));
    assert_eq!(doc.status, 503);
    assert_eq!(server.requests().iter().filter(|r| r.path == "/flaky").count(), 2);
}

#[test]
fn unreachable_host_is_status_zero() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let doc = Fetcher::new(policy(100.0)).unwrap().fetch_document("n", &format!("http://{addr}/x"));
    assert_eq!(doc.status, 0);
    assert!(doc.note.is_some());
}

#[test]
fn same_host_spacing_respects_rate() {
    let server = site();
    let f = Fetcher::new(FetchPolicy { respect_robots: false, ..policy(1.0) }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut store = DocumentStore::open(dir.path()).unwrap();
    let items = vec![item(format!("{}/page", server.base)), item(format!("{}/other", server.base))];
    let out = f.harvest("n", &items, &mut store).unwrap();
    assert_eq!(out.fetched, 2);
    let reqs = server.requests();
    assert_eq!(reqs.len(), 2);
    let gap = reqs[1].at.duration_since(reqs[0].at);
    assert!(gap >= Duration::from_millis(990), "gap {gap:?}");
}

#[test]
fn harvest_honours_robots_resume_and_challenges() {
    let server = site();
    let f = Fetcher::new(policy(200.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut store = DocumentStore::open(dir.path()).unwrap();
    let items = vec![
        item(format!("{}/page", server.base)),
        item(format!("{}/private/a", server.base)),
        item(format!("{}/check", server.base)),
        item(format!("{}/other", server.base)),
    ];
    let out = f.harvest("n", &items, &mut store).unwrap();
    assert_eq!(out.fetched, 2);
    assert_eq!(out.skipped_robots(), 1);
    assert_eq!(out.skipped_blocked(), 1);
    let host = out.hosts.values().next().unwrap();
    assert!(host.human_verification);
    let docs = store.load("n").unwrap();
    assert_eq!(docs.len(), 2);
    assert!(docs.iter().any(|d| d.note.as_deref() == Some(HUMAN_VERIFICATION)));
    assert!(docs.iter().all(|d| d.snapshot_timestamp.as_deref() == Some("20200101000000")));

    let mut reopened = DocumentStore::open(dir.path()).unwrap();
    let again = Fetcher::new(policy(200.0)).unwrap().harvest("n", &items[..1], &mut reopened).unwrap();
    assert_eq!((again.fetched, again.skipped_existing), (0, 1));
}
