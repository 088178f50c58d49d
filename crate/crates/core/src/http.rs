//! Blocking HTTP plumbing shared by the remote clients.

use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder, Response};

/// Retry schedule: `retries` extra attempts after the first, sleeping
/// `backoff · 2^k` before retry k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 2, backoff: Duration::from_millis(500), timeout: Duration::from_secs(10) }
    }
}

impl RetryPolicy {
    pub fn client(&self) -> Client {
        Client::builder().timeout(self.timeout).build().expect("HTTP client builds")
    }

    /// Sends the request built by `build`, retrying transport errors, 429
    /// and 5xx responses. Other responses are returned as they are.
    pub fn send(&self, build: impl Fn() -> RequestBuilder) -> Result<Response, String> {
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match build().send() {
                Ok(resp) if resp.status().is_server_error() || resp.status().as_u16() == 429 => {
                    last = format!("HTTP {}", resp.status());
                }
                Ok(resp) => return Ok(resp),
                Err(e) => last = e.to_string(),
            }
            log::debug!("attempt {} failed: {last}", attempt + 1);
        }
        Err(format!("{last} after {} attempts", self.retries + 1))
    }
}
