use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::SourceSpec;

pub const CDX_ENDPOINT: &str = "https://web.archive.org/cdx/search/cdx";

/// Field names the CDX server may emit in a JSON header row.
const KNOWN_FIELDS: &[&str] = &[
    "urlkey",
    "timestamp",
    "original",
    "mimetype",
    "statuscode",
    "digest",
    "length",
    "offset",
    "filename",
    "redirect",
    "robotflags",
    "dupecount",
    "groupcount",
    "uniqcount",
    "endtimestamp",
];

/// One snapshot metadata row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdxRecord {
    pub original_url: String,
    /// `YYYYMMDDhhmmss`
    pub timestamp: String,
    pub mimetype: String,
    pub statuscode: String,
}

impl CdxRecord {
    pub fn captured_at(&self) -> Option<NaiveDateTime> {
        parse_timestamp(&self.timestamp)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdxParse {
    pub records: Vec<CdxRecord>,
    /// Rows lacking a required field or not shaped as an array of strings.
    pub skipped_missing: usize,
    pub skipped_bad_timestamp: usize,
    /// Rows with a 4xx/5xx status that slipped past the server-side filter.
    pub skipped_error_status: usize,
}

impl CdxParse {
    pub fn skipped(&self) -> usize {
        self.skipped_missing + self.skipped_bad_timestamp + self.skipped_error_status
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CdxError {
    #[error("malformed CDX response at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("unknown CDX header field(s): {}", .0.join(", "))]
    UnknownFields(Vec<String>),
}

/// Builds the index query for one source, parameters in fixed order.
pub fn build_cdx_query(spec: &SourceSpec) -> String {
    build_cdx_query_at(CDX_ENDPOINT, spec)
}

/// Same as [`build_cdx_query`] against an alternative endpoint (mirrors, tests).
pub fn build_cdx_query_at(endpoint: &str, spec: &SourceSpec) -> String {
    format!(
        "{endpoint}?url={}&matchType=prefix&output=json&from={}&to={}\
         &filter=mimetype:(text/html|application/pdf)&filter=!statuscode:^[45]",
        spec.base_url, spec.from_year, spec.to_year
    )
}

/// Parses the JSON array-of-arrays form; the first row names the fields.
pub fn parse_cdx_response(body: &str) -> Result<CdxParse, CdxError> {
    let doc: Value = serde_json::from_str(body).map_err(|e| CdxError::Malformed {
        offset: byte_offset(body, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let Value::Array(rows) = doc else {
        return Err(CdxError::Malformed {
            offset: 0,
            message: "top-level value is not an array".into(),
        });
    };
    let mut rows = rows.into_iter();
    let Some(header) = rows.next() else {
        return Ok(CdxParse::default());
    };
    let header = string_row(&header).ok_or_else(|| CdxError::Malformed {
        offset: 0,
        message: "header row is not an array of strings".into(),
    })?;

    let unknown: Vec<String> = header
        .iter()
        .filter(|h| !KNOWN_FIELDS.contains(&h.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(CdxError::UnknownFields(unknown));
    }

    let col = |name: &str| header.iter().position(|h| h == name);
    let (c_orig, c_ts, c_mime, c_status) =
        (col("original"), col("timestamp"), col("mimetype"), col("statuscode"));

    let mut out = CdxParse::default();
    for row in rows {
        let Some(row) = string_row(&row) else {
            out.skipped_missing += 1;
            continue;
        };
        let field = |c: Option<usize>| {
            c.and_then(|i| row.get(i))
                .filter(|v| !v.is_empty() && v.as_str() != "-")
                .cloned()
        };
        let (Some(original_url), Some(timestamp), Some(mimetype), Some(statuscode)) =
            (field(c_orig), field(c_ts), field(c_mime), field(c_status))
        else {
            out.skipped_missing += 1;
            continue;
        };
        if parse_timestamp(&timestamp).is_none() {
            out.skipped_bad_timestamp += 1;
            continue;
        }
        if statuscode.starts_with('4') || statuscode.starts_with('5') {
            out.skipped_error_status += 1;
            continue;
        }
        out.records.push(CdxRecord { original_url, timestamp, mimetype, statuscode });
    }
    Ok(out)
}

fn string_row(v: &Value) -> Option<Vec<String>> {
    v.as_array()?
        .iter()
        .map(|c| c.as_str().map(str::to_owned))
        .collect()
}

fn parse_timestamp(ts: &str) -> Option<NaiveDateTime> {
    if ts.len() != 14 || !ts.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    NaiveDateTime::parse_from_str(ts, "%Y%m%d%H%M%S").ok()
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
