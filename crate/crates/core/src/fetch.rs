//! HTTP fetching with bounded parallelism and per-host politeness.
//!
//! The [`Fetch`] trait separates network access from pool construction and
//! polling so those can be driven by an in-memory fake in tests. The real
//! implementation wraps a blocking HTTP client; every request is an
//! unconditional GET (conditional requests would defeat change detection).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Failure class of a fetch outcome, the ⊥ payload of a poll record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Dns,
    Connect,
    Timeout,
    Tls,
    HttpStatus(u16),
    EmptyBody,
    ReadError,
}

impl ErrorClass {
    /// Transient failures are retried once during a round.
    pub fn is_transient(&self) -> bool {
        matches!(self, ErrorClass::Dns | ErrorClass::Connect | ErrorClass::Timeout)
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorClass::Dns => f.write_str("dns"),
            ErrorClass::Connect => f.write_str("connect"),
            ErrorClass::Timeout => f.write_str("timeout"),
            ErrorClass::Tls => f.write_str("tls"),
            ErrorClass::HttpStatus(code) => write!(f, "http_status({code})"),
            ErrorClass::EmptyBody => f.write_str("empty_body"),
            ErrorClass::ReadError => f.write_str("read_error"),
        }
    }
}

impl FromStr for ErrorClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dns" => Ok(ErrorClass::Dns),
            "connect" => Ok(ErrorClass::Connect),
            "timeout" => Ok(ErrorClass::Timeout),
            "tls" => Ok(ErrorClass::Tls),
            "empty_body" => Ok(ErrorClass::EmptyBody),
            "read_error" => Ok(ErrorClass::ReadError),
            other => other
                .strip_prefix("http_status(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|code| code.parse().ok())
                .map(ErrorClass::HttpStatus)
                .ok_or_else(|| format!("unknown error class `{other}`")),
        }
    }
}

/// Network-level failure, before any HTTP status is seen.
pub type NetworkError = ErrorClass;

/// A completed HTTP exchange, whatever its status code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub content_type: Option<String>,
    /// URL after redirects, when it differs from the request URL.
    pub final_url: String,
}

pub trait Fetch: Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, NetworkError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchConfig {
    pub timeout_seconds: u64,
    /// Immediate retries on transient errors (dns/connect/timeout).
    pub retries: u32,
    pub max_redirects: u32,
    pub workers: usize,
    pub per_host_cap: usize,
    /// Fixed inter-request delay per host, in milliseconds.
    pub host_delay_ms: u64,
    pub user_agent: String,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            timeout_seconds: 30,
            retries: 1,
            max_redirects: 10,
            workers: 16,
            per_host_cap: 4,
            host_delay_ms: 100,
            user_agent: format!("scriptwatch/{}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// Blocking HTTP fetcher. Sends a fixed User-Agent and `Cache-Control:
/// no-cache`, accepts gzip, follows redirects up to the configured cap, and
/// never sends cookies.
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(config: &FetchConfig) -> Result<HttpFetcher, String> {
        let mut headers = reqwest::header::HeaderMap::new();
        headers.insert(
            reqwest::header::CACHE_CONTROL,
            reqwest::header::HeaderValue::from_static("no-cache"),
        );
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_seconds))
            .redirect(reqwest::redirect::Policy::limited(config.max_redirects as usize))
            .user_agent(config.user_agent.clone())
            .default_headers(headers)
            .build()
            .map_err(|e| format!("building HTTP client: {e}"))?;
        Ok(HttpFetcher { client })
    }
}

impl Fetch for HttpFetcher {
    fn get(&self, url: &str) -> Result<HttpResponse, NetworkError> {
        let response = self.client.get(url).send().map_err(classify_error)?;
        let status = response.status().as_u16();
        let final_url = response.url().to_string();
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(|s| s.to_string());
        let body = response
            .bytes()
            .map_err(|e| {
                if e.is_timeout() {
                    ErrorClass::Timeout
                } else {
                    ErrorClass::ReadError
                }
            })?
            .to_vec();
        Ok(HttpResponse {
            status,
            body,
            content_type,
            final_url,
        })
    }
}

fn classify_error(e: reqwest::Error) -> ErrorClass {
    if e.is_timeout() {
        return ErrorClass::Timeout;
    }
    // reqwest does not expose DNS or TLS failures structurally; inspect the
    // source chain.
    let mut chain = String::new();
    let mut source: Option<&(dyn std::error::Error + 'static)> = Some(&e);
    while let Some(err) = source {
        chain.push_str(&err.to_string().to_ascii_lowercase());
        chain.push(' ');
        source = err.source();
    }
    if chain.contains("dns") || chain.contains("resolve") || chain.contains("lookup") {
        ErrorClass::Dns
    } else if chain.contains("tls") || chain.contains("certificate") || chain.contains("ssl") {
        ErrorClass::Tls
    } else if e.is_connect() {
        ErrorClass::Connect
    } else if e.is_body() || e.is_decode() {
        ErrorClass::ReadError
    } else {
        ErrorClass::Connect
    }
}

/// One GET with the configured number of immediate retries on transient
/// failures.
pub fn get_with_retry<F: Fetch + ?Sized>(
    fetcher: &F,
    url: &str,
    retries: u32,
) -> Result<HttpResponse, NetworkError> {
    let mut attempt = 0;
    loop {
        match fetcher.get(url) {
            Ok(response) => return Ok(response),
            Err(e) if e.is_transient() && attempt < retries => attempt += 1,
            Err(e) => return Err(e),
        }
    }
}

struct HostState {
    inflight: usize,
    next_ok: Instant,
}

struct SchedulerState {
    /// Per host, the indices (into the job list) still waiting.
    queues: HashMap<String, std::collections::VecDeque<usize>>,
    hosts: HashMap<String, HostState>,
    remaining: usize,
}

/// Fetches every (host, url) job with bounded parallelism: at most
/// `config.workers` requests in flight overall and `config.per_host_cap`
/// per host, with a fixed inter-request delay per host. Results come back
/// indexed by job position; ordering decisions stay with the caller.
pub fn fetch_all<F: Fetch + ?Sized>(
    jobs: &[(String, String)],
    fetcher: &F,
    config: &FetchConfig,
) -> Vec<Result<HttpResponse, NetworkError>> {
    let mut queues: HashMap<String, std::collections::VecDeque<usize>> = HashMap::new();
    for (i, (host, _)) in jobs.iter().enumerate() {
        queues.entry(host.clone()).or_default().push_back(i);
    }
    let state = Mutex::new(SchedulerState {
        queues,
        hosts: HashMap::new(),
        remaining: jobs.len(),
    });
    let results: Vec<Mutex<Option<Result<HttpResponse, NetworkError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let delay = Duration::from_millis(config.host_delay_ms);
    let cap = config.per_host_cap.max(1);
    let workers = config.workers.clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let picked = {
                    let mut st = state.lock().unwrap();
                    if st.remaining == 0 {
                        return;
                    }
                    let now = Instant::now();
                    let candidate = st
                        .queues
                        .iter()
                        .filter(|(_, q)| !q.is_empty())
                        .filter(|(host, _)| {
                            st.hosts.get(*host).map_or(true, |h| {
                                h.inflight < cap && now >= h.next_ok
                            })
                        })
                        .map(|(host, _)| host.clone())
                        .min();
                    match candidate {
                        Some(host) => {
                            let idx = st.queues.get_mut(&host).unwrap().pop_front().unwrap();
                            st.remaining -= 1;
                            let entry = st.hosts.entry(host).or_insert(HostState {
                                inflight: 0,
                                next_ok: now,
                            });
                            entry.inflight += 1;
                            entry.next_ok = now + delay;
                            Some(idx)
                        }
                        None => None,
                    }
                };
                match picked {
                    Some(idx) => {
                        let (host, url) = &jobs[idx];
                        let result = get_with_retry(fetcher, url, config.retries);
                        *results[idx].lock().unwrap() = Some(result);
                        let mut st = state.lock().unwrap();
                        if let Some(h) = st.hosts.get_mut(host) {
                            h.inflight -= 1;
                        }
                    }
                    None => std::thread::sleep(Duration::from_millis(2)),
                }
            });
        }
    });

    results
        .into_iter()
        .map(|cell| cell.into_inner().unwrap().expect("every job completes"))
        .collect()
}
