use std::env;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{DecisionProvider, DecisionRequest, ProviderError, ProviderResponse, TokenUsage};

/// Settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Per-request timeout, seconds.
    pub timeout: f64,
    /// Retries after the first request on transport errors, 5xx and 429.
    pub max_retries: u32,
    /// Environment variable holding the API key; `None` sends no key.
    pub api_key_env: Option<String>,
    /// Requests allowed in flight at once.
    pub max_concurrent: usize,
    /// First backoff delay, seconds; doubles on each retry.
    pub backoff_initial: f64,
    /// Upper bound on a single backoff delay, seconds.
    pub backoff_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-2024-08-06".into(),
            temperature: 0.0,
            timeout: 60.0,
            max_retries: 4,
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_concurrent: 2,
            backoff_initial: 1.0,
            backoff_max: 30.0,
            max_tokens: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::Configuration(m.into()));
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return bad("timeout must be positive");
        }
        if self.max_concurrent == 0 {
            return bad("max_concurrent must be at least 1");
        }
        if !(self.backoff_initial >= 0.0 && self.backoff_max >= 0.0) {
            return bad("backoff delays must be non-negative");
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return bad("endpoint must be an http(s) URL");
        }
        Ok(())
    }
}

/// Counting semaphore capping requests in flight.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Failure {
    Retry { message: String, wait: Option<Duration> },
    Fatal(ProviderError),
}

#[derive(Debug)]
pub struct RemoteProvider {
    cfg: ProviderConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemoteProvider {
    /// Fails if the configuration is invalid or the key variable is unset.
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(env::var(var).map_err(|_| {
                ProviderError::Configuration(format!("environment variable {var} with the API key is not set"))
            })?),
            None => None,
        };
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(cfg.timeout))
            .build();
        Ok(Self {
            gate: Gate::new(cfg.max_concurrent),
            cfg,
            api_key,
            agent,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    /// Request body in the chat-completions wire format.
    pub fn request_body(&self, req: &DecisionRequest<'_>) -> Value {
        let mut content = vec![json!({"type": "text", "text": req.prompt.user_text})];
        for img in &req.prompt.images {
            content.push(json!({"type": "image_url", "image_url": {"url": img.data_url()}}));
        }
        let mut messages = vec![
            json!({"role": "system", "content": req.prompt.system_text}),
            json!({"role": "user", "content": content}),
        ];
        for c in req.corrections {
            messages.push(json!({"role": "assistant", "content": c.rejected}));
            messages.push(json!({"role": "user", "content": c.message}));
        }
        let mut body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        });
        if let Some(n) = self.cfg.max_tokens {
            body["max_tokens"] = json!(n);
        }
        body
    }

    fn send(&self, body: &Value) -> Result<(String, Option<TokenUsage>), Failure> {
        let mut call = self.agent.post(&self.cfg.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match call.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let wait = r
                    .header("Retry-After")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|s| s.is_finite() && *s >= 0.0)
                    .map(Duration::from_secs_f64);
                let text = r.into_string().unwrap_or_default();
                let message = format!("HTTP {code}: {}", text.chars().take(300).collect::<String>());
                return Err(if code == 429 || code >= 500 {
                    Failure::Retry { message, wait }
                } else {
                    Failure::Fatal(ProviderError::InvalidResponse(message))
                });
            }
            Err(e) => {
                return Err(Failure::Retry {
                    message: e.to_string(),
                    wait: None,
                })
            }
        };
        let v: Value = resp.into_json().map_err(|e| Failure::Retry {
            message: format!("reading response body: {e}"),
            wait: None,
        })?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Failure::Fatal(ProviderError::InvalidResponse("no choices[0].message.content".into())))?
            .to_string();
        let usage = v.get("usage").map(|u| TokenUsage {
            prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
        });
        Ok((text, usage))
    }

    fn backoff(&self, retry: u32) -> Duration {
        let secs = self.cfg.backoff_initial * 2f64.powi(retry as i32);
        Duration::from_secs_f64(secs.min(self.cfg.backoff_max))
    }
}

impl DecisionProvider for RemoteProvider {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        let body = self.request_body(req);
        let _permit = self.gate.acquire();
        let start = Instant::now();
        let mut requests = 0;
        loop {
            requests += 1;
            match self.send(&body) {
                Ok((raw_text, usage)) => {
                    return Ok(ProviderResponse {
                        raw_text,
                        latency: start.elapsed().as_secs_f64(),
                        requests,
                        usage,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry { message, wait }) => {
                    if requests > self.cfg.max_retries {
                        return Err(ProviderError::Exhausted { requests, last: message });
                    }
                    let delay = wait.unwrap_or_else(|| self.backoff(requests - 1));
                    log::warn!("{}: {message}; retrying in {:.2}s", req.key, delay.as_secs_f64());
                    thread::sleep(delay);
                }
            }
        }
    }
}
