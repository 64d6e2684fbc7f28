//! Client for an out-of-process generator model.

use std::time::Duration;

use serde::Deserialize;

use super::{Candidate, DecodeConfig, Prediction, ResolverError};
use crate::dsl::parse_invocation;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Base URL of a generator service and the per-request timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub url: String,
    pub timeout: Duration,
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Endpoint {
            url: url.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Deserialize)]
struct WireCandidate {
    text: String,
    score: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalResult {
    pub prediction: Prediction,
    /// Candidate texts that did not parse, with the parse error.
    pub dropped: Vec<String>,
}

/// Sends `{query, config}` to `POST {url}/generate` and ranks the parsed
/// candidates. Unparseable candidate strings are dropped with a warning.
pub async fn external_generate(
    endpoint: &Endpoint,
    query: &str,
    config: &DecodeConfig,
) -> Result<ExternalResult, ResolverError> {
    config.validate()?;
    let client = reqwest::Client::builder()
        .timeout(endpoint.timeout)
        .build()
        .map_err(|e| ResolverError::Http(e.to_string()))?;
    let url = format!("{}/generate", endpoint.url.trim_end_matches('/'));
    let body = serde_json::json!({"query": query, "config": config});
    let fail = |e: reqwest::Error| {
        if e.is_timeout() {
            ResolverError::Timeout(endpoint.timeout)
        } else {
            ResolverError::Http(e.to_string())
        }
    };
    let response = client.post(&url).json(&body).send().await.map_err(fail)?;
    let status = response.status();
    if !status.is_success() {
        return Err(ResolverError::Http(format!("{url} answered {status}")));
    }
    let bytes = response.bytes().await.map_err(fail)?;
    let wire: WireResponse =
        serde_json::from_slice(&bytes).map_err(|e| ResolverError::Malformed(e.to_string()))?;
    let mut candidates = Vec::new();
    let mut dropped = Vec::new();
    for c in wire.candidates {
        match parse_invocation(&c.text) {
            Ok(invocation) => candidates.push(Candidate {
                invocation,
                score: c.score,
            }),
            Err(e) => {
                log::warn!("dropping generator candidate {:?}: {e}", c.text);
                dropped.push(format!("{}: {e}", c.text));
            }
        }
    }
    Ok(ExternalResult {
        prediction: Prediction::from_candidates(candidates),
        dropped,
    })
}
