use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Correction, DecisionProvider, DecisionRequest, ProviderError, RequestKey};
use crate::prompting::{correction_message, ParseError, PromptBundle};

/// One provider answer and what the parser made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub raw_text: String,
    pub latency: f64,
    pub requests: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ParseError>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderFailure {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no valid answer after {reprompts} corrective re-prompts: {last}")]
    Parse { reprompts: usize, last: ParseError },
}

impl ProviderFailure {
    /// Configuration problems abort the whole run rather than one episode.
    pub fn is_configuration(&self) -> bool {
        matches!(self, ProviderFailure::Provider(ProviderError::Configuration(_)))
    }
}

/// Asks `provider` and parses the answer. A rejected answer is sent back
/// with a corrective message, at most `max_reprompts` times. Every answer
/// received is returned in order, whatever the outcome.
pub fn with_parse_retry<T>(
    provider: &dyn DecisionProvider,
    key: &RequestKey,
    prompt: &PromptBundle,
    max_reprompts: usize,
    parse: impl Fn(&str) -> Result<T, ParseError>,
) -> (Result<T, ProviderFailure>, Vec<Attempt>) {
    let mut attempts = Vec::new();
    let mut corrections: Vec<Correction> = Vec::new();
    let mut key = key.clone();
    loop {
        let req = DecisionRequest {
            key: &key,
            prompt,
            corrections: &corrections,
        };
        let resp = match provider.decide(&req) {
            Ok(r) => r,
            Err(e) => return (Err(e.into()), attempts),
        };
        match parse(&resp.raw_text) {
            Ok(v) => {
                attempts.push(Attempt {
                    raw_text: resp.raw_text,
                    latency: resp.latency,
                    requests: resp.requests,
                    error: None,
                });
                return (Ok(v), attempts);
            }
            Err(err) => {
                log::debug!("{key}: rejected answer: {err}");
                attempts.push(Attempt {
                    raw_text: resp.raw_text.clone(),
                    latency: resp.latency,
                    requests: resp.requests,
                    error: Some(err.clone()),
                });
                if key.attempt >= max_reprompts {
                    return (
                        Err(ProviderFailure::Parse {
                            reprompts: key.attempt,
                            last: err,
                        }),
                        attempts,
                    );
                }
                corrections.push(Correction {
                    rejected: resp.raw_text,
                    message: correction_message(&err),
                });
                key.attempt += 1;
            }
        }
    }
}
