//! Trace spans, one JSON object per line:
//!
//! ```json
//! {"trace_id":"t1","span_id":"s2","parent_span_id":"s1","service":"ts-order-service","operation":"/api/v1/orderservice/order"}
//! ```
//!
//! `parent_span_id` is omitted or `null` for root spans. Blank lines are
//! skipped.

use std::path::Path;

use super::fetch::read_file;
use super::{IngestError, Span};

pub fn parse_traces(text: &str) -> Result<Vec<Span>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: Span = serde_json::from_str(line).map_err(|e| IngestError::malformed("traces", format!("line {}: {e}", i + 1)))?;
        if s.service.is_empty() || s.operation.is_empty() {
            return Err(IngestError::malformed(
                "traces",
                format!("line {}: empty service or operation", i + 1),
            ));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn load_traces(files: &[impl AsRef<Path>]) -> Result<Vec<Span>, IngestError> {
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_traces(&read_file(f.as_ref())?)?);
    }
    Ok(out)
}
