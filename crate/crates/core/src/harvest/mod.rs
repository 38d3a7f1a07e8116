//! Snapshot-index queries, worklist derivation and polite live fetching.

mod cdx;
mod fetch;
mod robots;
mod source;
mod store;
mod worklist;

pub use cdx::{build_cdx_query, build_cdx_query_at, parse_cdx_response, CdxError, CdxParse, CdxRecord, CDX_ENDPOINT};
pub use fetch::{fetch_live, FetchPolicy, Fetcher, HarvestOutcome, HostReport, HUMAN_VERIFICATION, PROXY_ENV};
pub(crate) use fetch::install_crypto_provider;
pub use robots::RobotsRules;
pub use source::{Group, SourceError, SourceSpec};
pub use store::{doc_id, encode_body, DocumentStore, RawDocument, StoreError};
pub use worklist::{derive_worklist, normalize_url, WorkItem, Worklist};
