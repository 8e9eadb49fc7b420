//! Blocking JSON-over-HTTP client with bounded retries.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("request to {url} failed after {attempts} attempts: {last}")]
    Exhausted {
        url: String,
        attempts: u32,
        last: String,
    },
    #[error("malformed response from {url}: {message}")]
    Malformed { url: String, message: String },
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl JsonClient {
    pub fn new(timeout: Duration, retry: RetryPolicy) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        JsonClient { agent, retry }
    }

    /// POSTs `body` and parses the JSON response, retrying transport errors
    /// and non-success statuses with exponential backoff.
    pub fn post<B: Serialize>(&self, url: &str, body: &B) -> Result<Value, HttpError> {
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            match self.agent.post(url).send_json(body) {
                Ok(mut resp) if resp.status().is_success() => {
                    return resp.body_mut().read_json::<Value>().map_err(|e| {
                        HttpError::Malformed {
                            url: url.to_owned(),
                            message: e.to_string(),
                        }
                    });
                }
                Ok(resp) => last = format!("status {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
            log::warn!("POST {url} attempt {attempt} failed: {last}");
            if attempt < self.retry.attempts {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(HttpError::Exhausted {
            url: url.to_owned(),
            attempts: self.retry.attempts.max(1),
            last,
        })
    }
}
