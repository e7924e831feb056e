//! HTTP client for an out-of-process image-to-image service.
//!
//! `POST {endpoint}/generate` with `{"image": <base64 PNG>, "prompt": ..., "strength": ...}`,
//! answered by `{"image": <base64 PNG>}` on 200 or `{"error": ...}` otherwise.
//! Transport failures, 5xx and 429 are retried; other statuses are final.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::GeneratorBackend;
use crate::error::{Error, Result};
use crate::imgcore::{decode_image_bytes, encode_png, ImageBuffer};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_RETRIES: u32 = 2;

const MAX_RESPONSE_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Serialize)]
struct GenerateRequest<'a> {
    image: String,
    prompt: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    strength: Option<f32>,
}

#[derive(Deserialize)]
struct GenerateResponse {
    image: String,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
}

enum Attempt {
    Done(ImageBuffer),
    Retry(String),
    Fail(Error),
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    endpoint: String,
    retries: u32,
    backoff: Duration,
    strength: Option<f32>,
    id: String,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let endpoint = endpoint.into().trim_end_matches('/').to_string();
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        let mut backend = Self {
            id: String::new(),
            endpoint,
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(200),
            strength: None,
            agent,
        };
        backend.refresh_id();
        backend
    }

    /// Number of retries after the first attempt.
    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    /// Base delay between attempts; doubles after each retry.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_strength(mut self, strength: Option<f32>) -> Self {
        self.strength = strength;
        self.refresh_id();
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn refresh_id(&mut self) {
        self.id = match self.strength {
            Some(s) => format!("remote:{}#strength={s}", self.endpoint),
            None => format!("remote:{}", self.endpoint),
        };
    }

    fn attempt(&self, url: &str, body: &GenerateRequest<'_>) -> Attempt {
        let mut response = match self.agent.post(url).send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let bytes = match response
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_vec()
        {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(format!("reading response body: {e}")),
        };
        if status == 200 {
            return match parse_success(&bytes) {
                Ok(img) => Attempt::Done(img),
                Err(e) => Attempt::Fail(e),
            };
        }
        let message = serde_json::from_slice::<ErrorResponse>(&bytes)
            .map(|e| e.error)
            .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).trim().to_string());
        if status >= 500 || status == 429 {
            Attempt::Retry(format!("HTTP {status}: {message}"))
        } else {
            Attempt::Fail(Error::Remote { status, message })
        }
    }
}

fn parse_success(bytes: &[u8]) -> Result<ImageBuffer> {
    let body: GenerateResponse = serde_json::from_slice(bytes)
        .map_err(|e| Error::Protocol(format!("malformed response JSON: {e}")))?;
    let png = BASE64
        .decode(body.image.as_bytes())
        .map_err(|e| Error::Protocol(format!("response image is not base64: {e}")))?;
    decode_image_bytes(&png).map_err(|e| Error::Protocol(format!("response image: {e}")))
}

impl GeneratorBackend for RemoteBackend {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, image: &ImageBuffer, rendered_prompt: &str) -> Result<ImageBuffer> {
        let url = format!("{}/generate", self.endpoint);
        let body = GenerateRequest {
            image: BASE64.encode(encode_png(image)?),
            prompt: rendered_prompt,
            strength: self.strength,
        };
        let attempts = self.retries + 1;
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 && !self.backoff.is_zero() {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(n - 1));
            }
            match self.attempt(&url, &body) {
                Attempt::Done(img) => return Ok(img),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg) => {
                    log::debug!("attempt {} of {attempts} to {url} failed: {msg}", n + 1);
                    last = msg;
                }
            }
        }
        Err(Error::Network {
            endpoint: self.endpoint.clone(),
            attempts,
            message: last,
        })
    }
}

/// One-shot call with the default retry count.
pub fn remote_generate(
    img: &ImageBuffer,
    rendered_prompt: &str,
    endpoint: &str,
    timeout: Duration,
) -> Result<ImageBuffer> {
    RemoteBackend::new(endpoint, timeout).generate(img, rendered_prompt)
}
