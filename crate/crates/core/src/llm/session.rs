use super::{CallRecord, Client, LlmError, Message};

/// The model calls made while answering one question. Each question gets
/// its own session, so concurrent questions never share a trace.
#[derive(Debug)]
pub struct Session {
    client: Client,
    calls: Vec<CallRecord>,
}

impl Session {
    pub fn new(client: Client) -> Self {
        Session {
            client,
            calls: Vec::new(),
        }
    }

    pub fn client(&self) -> &Client {
        &self.client
    }

    /// Sends a single user message and records the call, failed or not.
    pub fn ask(&mut self, stage: &str, prompt: String) -> Result<String, LlmError> {
        match self.client.complete(stage, vec![Message::user(prompt)]) {
            Ok((resp, rec)) => {
                self.calls.push(rec);
                Ok(resp.content)
            }
            Err((e, rec)) => {
                self.calls.push(rec);
                Err(e)
            }
        }
    }

    pub fn calls(&self) -> &[CallRecord] {
        &self.calls
    }

    /// Removes and returns the calls recorded so far.
    pub fn drain_calls(&mut self) -> Vec<CallRecord> {
        std::mem::take(&mut self.calls)
    }
}
