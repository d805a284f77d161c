use std::sync::Mutex;

use super::{DecisionProvider, DecisionRequest, ProviderError, ProviderResponse, ScriptEntry};

/// Passes requests through and remembers every answer as a script entry,
/// so a remote session can be replayed offline.
#[derive(Debug)]
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<Vec<ScriptEntry>>,
}

impl<P: DecisionProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Recorded entries in key order.
    pub fn entries(&self) -> Vec<ScriptEntry> {
        let mut v = self.log.lock().expect("recording lock").clone();
        v.sort_by(|a, b| a.key.cmp(&b.key));
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries()).expect("script entries serialize")
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: DecisionProvider> DecisionProvider for RecordingProvider<P> {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        let resp = self.inner.decide(req)?;
        self.log.lock().expect("recording lock").push(ScriptEntry {
            key: req.key.clone(),
            raw_text: resp.raw_text.clone(),
        });
        Ok(resp)
    }
}
