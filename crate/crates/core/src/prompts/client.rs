use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{LlmRequest, LlmResponse, PromptError};

pub const ENDPOINT_ENV: &str = "MUSEBENCH_LLM_ENDPOINT";
pub const TOKEN_ENV: &str = "MUSEBENCH_LLM_TOKEN";
pub const DEFAULT_RETRIES: u32 = 3;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
/// Re-requests after a response fails to parse.
pub const MAX_REGENERATIONS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unreadable response body: {0}")]
    BadBody(String),
    #[error("response cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
}

/// Sends one JSON body and returns status and raw response text.
pub trait Transport: Send + Sync {
    fn post(&self, body: &Value) -> Result<(u16, String), TransportError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    token: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            agent,
            endpoint: endpoint.into(),
            token,
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, body: &Value) -> Result<(u16, String), TransportError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok((status, text))
    }
}

/// On-disk responses keyed by the SHA-256 of the request's JSON form.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(ResponseCache { dir })
    }

    pub fn key(req: &LlmRequest) -> String {
        let bytes = serde_json::to_vec(req).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn path(&self, req: &LlmRequest) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(req)))
    }

    pub fn get(&self, req: &LlmRequest) -> Option<LlmResponse> {
        let text = std::fs::read_to_string(self.path(req)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, req: &LlmRequest, resp: &LlmResponse) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&serde_json::to_vec(resp).expect("response serializes"))?;
        tmp.persist(self.path(req)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub endpoint: String,
    pub token: Option<String>,
    pub model: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub max_in_flight: usize,
    pub cache_dir: Option<PathBuf>,
}

impl ClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ClientConfig {
            endpoint: endpoint.into(),
            token: None,
            model: None,
            timeout: Duration::from_secs(60),
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(500),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            cache_dir: None,
        }
    }

    /// Endpoint and token from the environment.
    pub fn from_env() -> Result<Self, LlmError> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .map_err(|_| LlmError::Config(format!("{ENDPOINT_ENV} is not set")))?;
        let mut config = ClientConfig::new(endpoint);
        config.token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Ok(config)
    }
}

/// Outcome of a request repeated until its response parses.
#[derive(Debug, Clone, PartialEq)]
pub struct Regenerated<T> {
    /// `None` when every attempt failed to parse.
    pub value: Option<T>,
    pub attempts: u32,
    pub last_error: Option<PromptError>,
}

pub struct LlmClient {
    transport: Box<dyn Transport>,
    cache: Option<ResponseCache>,
    model: Option<String>,
    retries: u32,
    backoff: Duration,
    max_in_flight: usize,
    network_calls: AtomicUsize,
}

fn extract_text(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::BadBody(e.to_string()))?;
    let found = v
        .pointer("/choices/0/message/content")
        .or_else(|| v.pointer("/choices/0/text"))
        .or_else(|| v.get("text"))
        .and_then(Value::as_str);
    found
        .map(str::to_string)
        .ok_or_else(|| LlmError::BadBody("no completion text".into()))
}

impl LlmClient {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        LlmClient {
            transport,
            cache: None,
            model: None,
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(500),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn from_config(config: &ClientConfig) -> Result<Self, LlmError> {
        let transport = HttpTransport::new(
            config.endpoint.clone(),
            config.token.clone(),
            config.timeout,
        );
        let mut client = LlmClient::new(Box::new(transport))
            .with_retries(config.retries, config.backoff)
            .with_max_in_flight(config.max_in_flight);
        client.model = config.model.clone();
        if let Some(dir) = &config.cache_dir {
            client = client.with_cache(ResponseCache::new(dir)?);
        }
        Ok(client)
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    /// Requests that reached the transport.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn body(&self, req: &LlmRequest) -> Value {
        let mut body = json!({
            "messages": [{"role": "user", "content": req.instruction}],
        });
        if let Some(model) = req.model.as_ref().or(self.model.as_ref()) {
            body["model"] = json!(model);
        }
        if let Some(t) = req.params.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = req.params.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    pub fn dispatch(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(req)) {
            return Ok(hit);
        }
        let body = self.body(req);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            let retryable = match self.transport.post(&body) {
                Ok((status, text)) if (200..300).contains(&status) => {
                    let resp = LlmResponse {
                        text: extract_text(&text)?,
                        status,
                    };
                    if let Some(cache) = &self.cache {
                        cache.put(req, &resp)?;
                    }
                    return Ok(resp);
                }
                Ok((status, text)) => {
                    let err = LlmError::Status { status, body: text };
                    if status != 429 && status < 500 {
                        return Err(err);
                    }
                    err
                }
                Err(e) => LlmError::Transport {
                    attempts: attempt,
                    message: e.0,
                },
            };
            if attempt > self.retries {
                return Err(retryable);
            }
            std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
        }
    }

    /// Dispatches every request with at most `max_in_flight` outstanding.
    /// Results are in input order.
    pub fn dispatch_all(&self, reqs: &[LlmRequest]) -> Vec<Result<LlmResponse, LlmError>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<LlmResponse, LlmError>>>> =
            reqs.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..self.max_in_flight.min(reqs.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= reqs.len() {
                        break;
                    }
                    let r = self.dispatch(&reqs[i]);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .expect("slot lock")
                    .expect("every slot filled")
            })
            .collect()
    }

    /// Dispatches `req` and parses the reply, re-requesting up to
    /// [`MAX_REGENERATIONS`] times while parsing fails.
    pub fn regenerate<T>(
        &self,
        req: &LlmRequest,
        parse: impl Fn(&str) -> Result<T, PromptError>,
    ) -> Result<Regenerated<T>, LlmError> {
        let mut last_error = None;
        for attempt in 0..=MAX_REGENERATIONS {
            let mut r = req.clone();
            r.attempt = attempt;
            let resp = self.dispatch(&r)?;
            match parse(&resp.text) {
                Ok(value) => {
                    return Ok(Regenerated {
                        value: Some(value),
                        attempts: attempt + 1,
                        last_error: None,
                    })
                }
                Err(e) => last_error = Some(e),
            }
        }
        Ok(Regenerated {
            value: None,
            attempts: MAX_REGENERATIONS + 1,
            last_error,
        })
    }
}
