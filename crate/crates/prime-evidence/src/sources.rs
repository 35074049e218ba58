//! Operating-system and remote quantum-RNG byte streams.
//!
//! The remote protocol: `GET {endpoint}?length=N&type=uint8`, answered with
//! status 200 and a JSON body
//! `{"type":"uint8","length":N,"data":[...N integers 0-255...],"success":true}`.

use std::collections::VecDeque;
use std::time::Duration;

use prime_evidence_core::{
    BitBlock, ByteStream, EntropyDescriptor, EntropySource, Error, Provenance,
};
use serde_json::Value;

/// Environment variable holding the default QRNG endpoint.
pub const QRNG_URL_ENV: &str = "PRIME_EVIDENCE_QRNG_URL";
/// Largest `length` sent in one request.
pub const MAX_BYTES_PER_REQUEST: usize = 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Bytes from the operating system's CSPRNG.
#[derive(Debug, Default, Clone, Copy)]
pub struct OsStream;

impl ByteStream for OsStream {
    fn fill_bytes(&mut self, dest: &mut [u8]) -> prime_evidence_core::Result<()> {
        getrandom::fill(dest).map_err(|e| Error::Transport(format!("operating system entropy: {e}")))
    }

    fn provenance(&self) -> Provenance {
        Provenance::OsEntropy
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QrngError {
    #[error("byte count {0} outside 1..={MAX_BYTES_PER_REQUEST}")]
    BadLength(usize),
    #[error("request to {endpoint} failed: {reason}")]
    Request { endpoint: String, reason: String },
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("service reported success=false")]
    Declined,
}

impl From<QrngError> for Error {
    fn from(e: QrngError) -> Self {
        Error::Transport(e.to_string())
    }
}

/// Validates a response body and returns exactly `expected` bytes.
pub fn decode_response(status: u16, body: &str, expected: usize) -> Result<Vec<u8>, QrngError> {
    if status != 200 {
        return Err(QrngError::Status(status));
    }
    let value: Value =
        serde_json::from_str(body).map_err(|e| QrngError::Malformed(format!("not JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| QrngError::Malformed("body is not an object".into()))?;
    match obj.get("success") {
        Some(Value::Bool(true)) => {}
        Some(Value::Bool(false)) => return Err(QrngError::Declined),
        _ => return Err(QrngError::Malformed("missing boolean `success`".into())),
    }
    if let Some(t) = obj.get("type") {
        if t != "uint8" {
            return Err(QrngError::Malformed(format!("type {t}, expected \"uint8\"")));
        }
    }
    if let Some(len) = obj.get("length") {
        if len.as_u64() != Some(expected as u64) {
            return Err(QrngError::Malformed(format!("length {len}, expected {expected}")));
        }
    }
    let data = obj
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| QrngError::Malformed("missing array `data`".into()))?;
    if data.len() != expected {
        return Err(QrngError::Malformed(format!(
            "{} data elements, expected {expected}",
            data.len()
        )));
    }
    data.iter()
        .map(|v| {
            v.as_u64()
                .and_then(|x| u8::try_from(x).ok())
                .ok_or_else(|| QrngError::Malformed(format!("element {v} outside 0..=255")))
        })
        .collect()
}

/// Client settings for a QRNG endpoint.
#[derive(Debug, Clone)]
pub struct QrngClient {
    endpoint: String,
    timeout: Duration,
    retries: u32,
    agent: ureq::Agent,
}

impl QrngClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_options(endpoint, DEFAULT_TIMEOUT, 0)
    }

    pub fn with_options(endpoint: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            timeout,
            retries,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// One logical fetch of `byte_count` bytes, retried up to `retries` times.
    pub fn fetch_bytes(&self, byte_count: usize) -> Result<Vec<u8>, QrngError> {
        if byte_count == 0 || byte_count > MAX_BYTES_PER_REQUEST {
            return Err(QrngError::BadLength(byte_count));
        }
        let mut attempt = 0;
        loop {
            match self.fetch_once(byte_count) {
                Ok(bytes) => return Ok(bytes),
                Err(e) if attempt >= self.retries => return Err(e),
                Err(_) => attempt += 1,
            }
        }
    }

    fn fetch_once(&self, byte_count: usize) -> Result<Vec<u8>, QrngError> {
        let request_err = |e: ureq::Error| QrngError::Request {
            endpoint: self.endpoint.clone(),
            reason: e.to_string(),
        };
        let mut response = self
            .agent
            .get(&self.endpoint)
            .query("length", byte_count.to_string())
            .query("type", "uint8")
            .call()
            .map_err(request_err)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(request_err)?;
        decode_response(status, &body, byte_count)
    }
}

/// Fetches `byte_count` bytes from `endpoint` and expands them MSB first.
pub fn fetch_remote_bits(endpoint: &str, byte_count: usize) -> Result<BitBlock, QrngError> {
    let bytes = QrngClient::new(endpoint).fetch_bytes(byte_count)?;
    let origin = EntropyDescriptor {
        provenance: Provenance::RemoteQrng {
            endpoint: endpoint.to_owned(),
        },
        bits_consumed: 0,
    };
    BitBlock::new(prime_evidence_core::entropy::expand_bytes_msb_first(&bytes), origin)
        .map_err(|e| QrngError::Malformed(e.to_string()))
}

/// A [`ByteStream`] that fetches from a QRNG endpoint in batches.
#[derive(Debug)]
pub struct QrngStream {
    client: QrngClient,
    batch: usize,
    buffer: VecDeque<u8>,
}

impl QrngStream {
    /// `batch` is the minimum request size, clamped to the per-request cap.
    pub fn new(client: QrngClient, batch: usize) -> Self {
        Self {
            client,
            batch: batch.clamp(1, MAX_BYTES_PER_REQUEST),
            buffer: VecDeque::new(),
        }
    }
}

impl ByteStream for QrngStream {
    fn fill_bytes(&mut self, dest: &mut [u8]) -> prime_evidence_core::Result<()> {
        while self.buffer.len() < dest.len() {
            let want = (dest.len() - self.buffer.len()).clamp(self.batch, MAX_BYTES_PER_REQUEST);
            self.buffer.extend(self.client.fetch_bytes(want)?);
        }
        let n = dest.len();
        for (out, byte) in dest.iter_mut().zip(self.buffer.drain(..n)) {
            *out = byte;
        }
        Ok(())
    }

    fn provenance(&self) -> Provenance {
        Provenance::RemoteQrng {
            endpoint: self.client.endpoint.clone(),
        }
    }
}

pub fn os_source() -> EntropySource {
    EntropySource::new(Box::new(OsStream))
}

pub fn qrng_source(client: QrngClient, batch: usize) -> EntropySource {
    EntropySource::new(Box::new(QrngStream::new(client, batch)))
}
