//! Line-delimited JSON snapshot format.
//!
//! ```text
//! {"format":"promkg-graph","version":1}
//! {"entity":{"id":"Node/node1","kind":"Node","name":"node1"}}
//! {"relation":{"src":"Node/node1","kind":"hosts","dst":"Pod/pod1"}}
//! ```
//!
//! The header comes first. Entities follow in id order, then relations in
//! `(src, kind, dst)` order, so two snapshots of equal graphs are
//! byte-identical and diff cleanly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Entity, Graph, GraphError, Relation};

pub const SNAPSHOT_FORMAT: &str = "promkg-graph";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Record {
    Entity(Entity),
    Relation(Relation),
}

impl Graph {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        let header = Header {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for e in self.entities() {
            let line = serde_json::to_string(&Record::Entity(e.clone())).expect("entity serializes");
            writeln!(w, "{line}")?;
        }
        for r in self.relations() {
            let line = serde_json::to_string(&Record::Relation(r.clone())).expect("relation serializes");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: R) -> Result<Graph, GraphError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, message: String| GraphError::Snapshot { line, message };

        let (_, first) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
        let header: Header = serde_json::from_str(&first?).map_err(|e| bad(1, format!("bad header: {e}")))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(bad(1, format!("unexpected format {:?}", header.format)));
        }
        if header.version != SNAPSHOT_VERSION {
            return Err(bad(1, format!("unsupported version {}", header.version)));
        }

        let mut g = Graph::new();
        for (i, line) in lines {
            let line = line?;
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
            match rec {
                Record::Entity(e) => {
                    g.insert_entity(e).map_err(|e| bad(n, e.to_string()))?;
                }
                Record::Relation(r) => {
                    g.insert_relation(r).map_err(|e| bad(n, e.to_string()))?;
                }
            }
        }
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let f = File::create(path)?;
        self.write_snapshot(BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
        let f = File::open(path)?;
        Graph::read_snapshot(f)
    }
}
