//! Component descriptions, one JSON object per line:
//!
//! ```json
//! {"kind":"Service","name":"ts-order-service","description":"Creates and queries train ticket orders."}
//! ```
//!
//! `kind` is `Service` or `API`. An entry for a component no other source
//! mentions creates it.

use std::path::Path;

use super::fetch::read_file;
use super::{DocEntry, IngestError};
use crate::graph::EntityKind;

pub fn parse_docs(text: &str) -> Result<Vec<DocEntry>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let d: DocEntry =
            serde_json::from_str(line).map_err(|e| IngestError::malformed("docs", format!("line {}: {e}", i + 1)))?;
        if !matches!(d.kind, EntityKind::Service | EntityKind::Api) {
            return Err(IngestError::UnknownKind {
                source_name: "docs".into(),
                kind: d.kind.to_string(),
            });
        }
        if d.name.is_empty() {
            return Err(IngestError::malformed("docs", format!("line {}: empty name", i + 1)));
        }
        out.push(d);
    }
    Ok(out)
}

pub fn load_docs(files: &[impl AsRef<Path>]) -> Result<Vec<DocEntry>, IngestError> {
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_docs(&read_file(f.as_ref())?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries() {
        let d = parse_docs(r#"{"kind":"Service","name":"order service","description":"manages ticket orders"}"#).unwrap();
        assert_eq!(d[0].description, "manages ticket orders");
        assert!(parse_docs(r#"{"kind":"API","name":"/x","description":"y"}"#).is_ok());
        assert!(matches!(
            parse_docs(r#"{"kind":"Pod","name":"p","description":"y"}"#),
            Err(IngestError::UnknownKind { .. })
        ));
    }
}
