//! Client for OpenAI-compatible `/v1/completions` servers.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use align_retrieve_core::backend::{CompletionBackend, SamplingParams, TokenLogprobs};
use align_retrieve_core::BackendError;
use serde_json::{json, Value};

pub const DEFAULT_API_KEY_ENV: &str = "ALIGN_RETRIEVE_API_KEY";

/// Raw HTTP exchange, swappable for tests.
pub trait Transport: Send + Sync {
    /// POSTs a JSON body and returns the status code and response body.
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<(u16, String), String>;
}

#[derive(Debug)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration) -> Result<(u16, String), String> {
        let mut request = self.agent.post(url).config().timeout_global(Some(timeout)).build();
        if let Some(key) = bearer {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.content_type("application/json").send(body).map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpSettings {
    pub base_url: String,
    pub model: String,
    pub timeout: Duration,
    /// Total attempts per request.
    pub max_retries: u32,
    pub max_concurrent: usize,
    /// First retry delay; doubled on every further attempt.
    pub backoff: Duration,
    pub api_key: Option<String>,
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Self { in_flight: Mutex::new(0), freed: Condvar::new(), max: max.max(1) }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpBackend {
    settings: HttpSettings,
    transport: Box<dyn Transport>,
    limiter: Limiter,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("base_url", &self.settings.base_url).field("model", &self.settings.model).finish()
    }
}

fn malformed(what: &str) -> BackendError {
    BackendError::Malformed(what.to_string())
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Self {
        Self::with_transport(settings, Box::new(UreqTransport::default()))
    }

    pub fn with_transport(settings: HttpSettings, transport: Box<dyn Transport>) -> Self {
        let limiter = Limiter::new(settings.max_concurrent);
        Self { settings, transport, limiter }
    }

    fn endpoint(&self) -> String {
        let base = self.settings.base_url.trim_end_matches('/');
        if base.ends_with("/v1") {
            format!("{base}/completions")
        } else {
            format!("{base}/v1/completions")
        }
    }

    /// Sends with retries on transport failures, 429 and 5xx.
    fn post(&self, body: &Value) -> Result<Value, BackendError> {
        let url = self.endpoint();
        let body = body.to_string();
        let attempts = self.settings.max_retries.max(1);
        let mut last = BackendError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.settings.backoff * 2u32.saturating_pow(attempt - 1));
            }
            let outcome = {
                let _permit = self.limiter.acquire();
                self.transport.post_json(&url, self.settings.api_key.as_deref(), &body, self.settings.timeout)
            };
            match outcome {
                Ok((status, text)) if (200..300).contains(&status) => {
                    return serde_json::from_str(&text).map_err(|e| malformed(&format!("invalid JSON: {e}")));
                }
                Ok((status, text)) => {
                    last = BackendError::Status { status, body: text };
                    if status != 429 && status < 500 {
                        return Err(last);
                    }
                }
                Err(e) => last = BackendError::Transport(e),
            }
        }
        Err(last)
    }
}

/// Slices the tokens of an echoed prompt that belong to the continuation,
/// given the context length in characters.
fn continuation_logprobs(logprobs: &Value, context_chars: usize) -> Result<TokenLogprobs, BackendError> {
    let tokens = logprobs["tokens"].as_array().ok_or_else(|| malformed("missing logprobs.tokens"))?;
    let values = logprobs["token_logprobs"].as_array().ok_or_else(|| malformed("missing logprobs.token_logprobs"))?;
    let offsets = logprobs["text_offset"].as_array().ok_or_else(|| malformed("missing logprobs.text_offset"))?;
    if tokens.len() != values.len() || tokens.len() != offsets.len() {
        return Err(malformed("logprobs arrays differ in length"));
    }
    let mut out_tokens = Vec::new();
    let mut out_values = Vec::new();
    for ((token, value), offset) in tokens.iter().zip(values).zip(offsets) {
        let token = token.as_str().ok_or_else(|| malformed("token is not a string"))?;
        let offset = offset.as_u64().ok_or_else(|| malformed("text_offset is not an integer"))? as usize;
        if offset + token.chars().count() <= context_chars {
            continue;
        }
        let value = value.as_f64().ok_or_else(|| malformed("continuation token without logprob"))?;
        out_tokens.push(token.to_string());
        out_values.push(value);
    }
    if out_tokens.is_empty() {
        return Err(BackendError::DegenerateInput("continuation produced no tokens".into()));
    }
    TokenLogprobs::new(out_tokens, out_values)
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<Vec<String>, BackendError> {
        if params.n == 0 {
            return Err(BackendError::InvalidParameter("at least one completion must be requested".into()));
        }
        let body = json!({
            "model": self.settings.model,
            "prompt": prompt,
            "n": params.n,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
            "seed": params.seed,
        });
        let response = self.post(&body)?;
        let choices = response["choices"].as_array().ok_or_else(|| malformed("missing choices"))?;
        let mut indexed: Vec<(u64, String)> = choices
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let text = c["text"].as_str().ok_or_else(|| malformed("choice without text"))?;
                Ok((c["index"].as_u64().unwrap_or(i as u64), text.to_string()))
            })
            .collect::<Result<_, BackendError>>()?;
        indexed.sort_by_key(|(i, _)| *i);
        Ok(indexed.into_iter().map(|(_, t)| t).collect())
    }

    fn score_continuation(&self, context: &str, continuation: &str) -> Result<TokenLogprobs, BackendError> {
        if continuation.trim().is_empty() {
            return Err(BackendError::DegenerateInput("continuation is empty".into()));
        }
        let body = json!({
            "model": self.settings.model,
            "prompt": format!("{context}{continuation}"),
            "n": 1,
            "temperature": 0.0,
            "max_tokens": 0,
            "logprobs": 0,
            "echo": true,
        });
        let response = self.post(&body)?;
        let logprobs = &response["choices"][0]["logprobs"];
        if logprobs.is_null() {
            return Err(malformed("missing choices[0].logprobs"));
        }
        continuation_logprobs(logprobs, context.chars().count())
    }
}
