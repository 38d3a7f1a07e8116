use std::collections::HashSet;

use url::Url;

use super::CdxRecord;

/// Deduplicated live-URL worklist derived from snapshot metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Worklist {
    pub items: Vec<WorkItem>,
    pub dropped_unparseable: usize,
}

/// One live URL plus the earliest-listed snapshot it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkItem {
    pub url: String,
    pub snapshot_timestamp: String,
    pub mimetype: String,
}

impl Worklist {
    pub fn urls(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.url.as_str()).collect()
    }
}

/// Lowercases scheme and host and strips the fragment. Path, trailing
/// slash and query string are kept as-is; CMS pages such as `?p=2075`
/// are distinct documents.
pub fn normalize_url(raw: &str) -> Option<String> {
    let raw = raw.trim();
    let mut url = match Url::parse(raw) {
        Ok(u) => u,
        Err(url::ParseError::RelativeUrlWithoutBase) if !raw.contains("://") => {
            Url::parse(&format!("http://{raw}")).ok()?
        }
        Err(_) => return None,
    };
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return None;
    }
    url.set_fragment(None);
    Some(url.into())
}

/// Normalizes every record URL and keeps the first occurrence of each.
pub fn derive_worklist(records: &[CdxRecord]) -> Worklist {
    let mut seen = HashSet::new();
    let mut out = Worklist::default();
    for rec in records {
        let Some(url) = normalize_url(&rec.original_url) else {
            out.dropped_unparseable += 1;
            continue;
        };
        if seen.insert(url.clone()) {
            out.items.push(WorkItem {
                url,
                snapshot_timestamp: rec.timestamp.clone(),
                mimetype: rec.mimetype.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(url: &str, ts: &str) -> CdxRecord {
        CdxRecord {
            original_url: url.into(),
            timestamp: ts.into(),
            mimetype: "text/html".into(),
            statuscode: "200".into(),
        }
    }

    #[test]
    fn collapses_case_and_fragment() {
        let wl = derive_worklist(&[rec("http://A.com/p#frag", "20150101000000"), rec("http://a.com/p", "20160101000000")]);
        assert_eq!(wl.urls(), vec!["http://a.com/p"]);
        assert_eq!(wl.items[0].snapshot_timestamp, "20150101000000");
    }

    #[test]
    fn empty_input() {
        assert_eq!(derive_worklist(&[]), Worklist::default());
    }

    #[test]
    fn keeps_query_and_trailing_slash() {
        assert_eq!(normalize_url("HTTPS://IENearth.org/?p=2075").unwrap(), "https://ienearth.org/?p=2075");
        assert_eq!(normalize_url("http://a.org/x/").unwrap(), "http://a.org/x/");
        assert_ne!(normalize_url("http://a.org/x/"), normalize_url("http://a.org/x"));
        assert_eq!(normalize_url("http://a.org/Path").unwrap(), "http://a.org/Path");
    }

    #[test]
    fn drops_unparseable() {
        let wl = derive_worklist(&[rec("http://", "1"), rec("mailto:x@y.z", "1"), rec("http://ok.org/", "1")]);
        assert_eq!(wl.urls(), vec!["http://ok.org/"]);
        assert_eq!(wl.dropped_unparseable, 2);
    }

    #[test]
    fn repeated_snapshots_give_one_entry() {
        let records = vec![
            rec("https://interfaithsustain.com/?p=15296", "20200815101010"),
            rec("https://interfaithsustain.com/?p=15296", "20211122070809"),
            rec("https://interfaithsustain.com/?p=15296", "20231122070809"),
        ];
        // Oracle: distinct normalized URLs as a plain set.
        let oracle: HashSet<String> = records.iter().filter_map(|r| normalize_url(&r.original_url)).collect();
        let wl = derive_worklist(&records);
        assert_eq!(wl.items.len(), oracle.len());
        assert_eq!(wl.items.len(), 1);
    }

    fn url_strategy() -> impl Strategy<Value = String> {
        (
            prop::sample::select(vec!["http", "HTTP", "https"]),
            prop::sample::select(vec!["a.org", "A.org", "b.com", "B.COM"]),
            prop::sample::select(vec!["", "/", "/x", "/x/", "/?p=1", "/X"]),
            prop::sample::select(vec!["", "#f", "#g"]),
        )
            .prop_map(|(s, h, p, f)| format!("{s}://{h}{p}{f}"))
    }

    proptest! {
        #[test]
        fn worklist_properties(urls in prop::collection::vec(url_strategy(), 0..40)) {
            let records: Vec<CdxRecord> = urls.iter().map(|u| rec(u, "20150101000000")).collect();
            let wl = derive_worklist(&records);
            prop_assert!(wl.items.len() <= records.len());
            let normalized: HashSet<String> = urls.iter().filter_map(|u| normalize_url(u)).collect();
            let out: HashSet<&str> = wl.urls().into_iter().collect();
            prop_assert_eq!(out.len(), wl.items.len());
            prop_assert_eq!(out.len(), normalized.len());
            for u in &out {
                prop_assert!(normalized.contains(*u));
            }
            let again: Vec<CdxRecord> = wl.urls().iter().map(|u| rec(u, "20150101000000")).collect();
            let twice = derive_worklist(&again);
            prop_assert_eq!(twice.urls(), wl.urls());
        }
    }
}
