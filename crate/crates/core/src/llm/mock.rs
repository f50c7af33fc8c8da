//! Deterministic providers for tests and offline runs.
//!
//! A mock script is a JSONL file, one entry per line:
//!
//! ```text
//! {"fingerprint":"<64 hex chars>","stage":"extract_paths","response":"..."}
//! ```
//!
//! `stage` is informational. Lookups go by fingerprint only; an unknown
//! fingerprint is an error, never an empty answer.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{count_tokens, fingerprint, ChatProvider, ChatRequest, ChatResponse, LlmError, Usage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub fingerprint: String,
    #[serde(default)]
    pub stage: String,
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockScript {
    entries: BTreeMap<String, ScriptEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("mock script line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mock script i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl MockScript {
    pub fn insert(&mut self, req: &ChatRequest, response: impl Into<String>) {
        let fp = fingerprint(req);
        self.entries.insert(
            fp.clone(),
            ScriptEntry {
                fingerprint: fp,
                stage: req.stage.clone(),
                response: response.into(),
            },
        );
    }

    pub fn insert_entry(&mut self, entry: ScriptEntry) {
        self.entries.insert(entry.fingerprint.clone(), entry);
    }

    pub fn get(&self, fingerprint: &str) -> Option<&ScriptEntry> {
        self.entries.get(fingerprint)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ScriptEntry> {
        self.entries.values()
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ScriptError> {
        let mut script = MockScript::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(&line).map_err(|e| ScriptError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            script.insert_entry(entry);
        }
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        let f = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(f))
    }

    /// Writes entries sorted by fingerprint.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), ScriptError> {
        for e in self.entries.values() {
            writeln!(w, "{}", serde_json::to_string(e).expect("entry serializes"))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScriptError> {
        let f = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }
}

fn estimated_usage(req: &ChatRequest, content: &str) -> Usage {
    Usage {
        prompt_tokens: req.estimated_tokens() as u64,
        completion_tokens: count_tokens(content) as u64,
    }
}

/// Replays a [`MockScript`]. Usage figures are token estimates.
#[derive(Debug, Clone)]
pub struct MockProvider {
    script: MockScript,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        MockProvider { script }
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let fp = fingerprint(req);
        match self.script.get(&fp) {
            Some(entry) => Ok(ChatResponse {
                usage: estimated_usage(req, &entry.response),
                content: entry.response.clone(),
            }),
            None => Err(LlmError::Unscripted {
                fingerprint: fp,
                stage: req.stage.clone(),
            }),
        }
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Provider backed by a closure; handy for recorders and failure injection.
pub struct FnProvider<F> {
    name: String,
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnProvider { name: name.into(), f }
    }
}

impl<F> ChatProvider for FnProvider<F>
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let content = (self.f)(req)?;
        Ok(ChatResponse {
            usage: estimated_usage(req, &content),
            content,
        })
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Wraps a provider and remembers every successful exchange, so a run
/// against a live or programmatic backend can be frozen into a script.
pub struct RecordingProvider<P> {
    inner: P,
    recorded: Mutex<MockScript>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider {
            inner,
            recorded: Mutex::new(MockScript::default()),
        }
    }

    pub fn script(&self) -> MockScript {
        self.recorded.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let resp = self.inner.complete(req)?;
        self.recorded
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(req, resp.content.clone());
        Ok(resp)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_and_unscripted() {
        let req = ChatRequest::user("stage", "prompt");
        let mut script = MockScript::default();
        script.insert(&req, "canned");
        let p = MockProvider::new(script);
        assert_eq!(p.complete(&req).unwrap().content, "canned");
        let other = ChatRequest::user("stage", "other prompt");
        match p.complete(&other) {
            Err(LlmError::Unscripted { fingerprint: fp, .. }) => {
                assert_eq!(fp, fingerprint(&other));
                let msg = p.complete(&other).unwrap_err().to_string();
                assert!(msg.contains(&fp));
            }
            r => panic!("expected unscripted error, got {r:?}"),
        }
    }

    #[test]
    fn script_file_round_trip() {
        let mut script = MockScript::default();
        script.insert(&ChatRequest::user("a", "one"), "1\nwith newline");
        script.insert(&ChatRequest::user("b", "two"), "2");
        let mut buf = Vec::new();
        script.write(&mut buf).unwrap();
        let back = MockScript::read(&buf[..]).unwrap();
        assert_eq!(back, script);
        assert!(MockScript::read(&b"{not json}\n"[..]).is_err());
    }

    #[test]
    fn recorder_captures() {
        let rec = RecordingProvider::new(FnProvider::new("echo", |r: &ChatRequest| {
            Ok(r.messages[0].content.to_uppercase())
        }));
        let req = ChatRequest::user("s", "abc");
        rec.complete(&req).unwrap();
        let replay = MockProvider::new(rec.script());
        assert_eq!(replay.complete(&req).unwrap().content, "ABC");
    }
}
