//! Ranked operator suggestions for natural-language queries: Okapi BM25
//! retrieval over HYBRID corpus samples, re-grounded against the query.

mod external;

use std::collections::HashMap;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

pub use external::{external_generate, Endpoint, ExternalResult, DEFAULT_TIMEOUT};

use crate::corpus::{ground_explicit_values, sample_invocations, FormulatedSample, TaskKind};
use crate::dsl::Invocation;
use crate::registry::{literal_json, Registry};

pub use crate::corpus::tokenize;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, thiserror::Error)]
pub enum ResolverError {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error("invalid decode config: {0}")]
    Config(String),
    #[error("generator request failed: {0}")]
    Http(String),
    #[error("generator did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("malformed generator response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Document {
    nl: String,
    terms: HashMap<String, usize>,
    len: usize,
    invocations: Vec<Invocation>,
}

/// Immutable BM25 index over the NL side of HYBRID samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolverIndex {
    docs: Vec<Document>,
    df: HashMap<String, usize>,
    avg_len: f64,
    k1: f64,
    b: f64,
}

/// Indexes the HYBRID samples of `samples` (other task kinds are ignored).
pub fn build_index(
    samples: &[FormulatedSample],
    k1: f64,
    b: f64,
) -> Result<ResolverIndex, ResolverError> {
    let mut docs = Vec::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    for s in samples.iter().filter(|s| s.task == TaskKind::Hybrid) {
        let invocations = sample_invocations(s)?;
        let tokens = tokenize(&s.nl);
        let mut terms: HashMap<String, usize> = HashMap::new();
        for t in &tokens {
            *terms.entry(t.clone()).or_default() += 1;
        }
        for t in terms.keys() {
            *df.entry(t.clone()).or_default() += 1;
        }
        docs.push(Document {
            nl: s.nl.clone(),
            terms,
            len: tokens.len(),
            invocations,
        });
    }
    let avg_len = if docs.is_empty() {
        0.0
    } else {
        docs.iter().map(|d| d.len as f64).sum::<f64>() / docs.len() as f64
    };
    Ok(ResolverIndex {
        docs,
        df,
        avg_len,
        k1,
        b,
    })
}

impl ResolverIndex {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// NL text of each document, in index order.
    pub fn documents(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.nl.as_str())
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of every document for `query`, summed over distinct
    /// query terms.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let mut terms = tokenize(query);
        let mut seen = std::collections::HashSet::new();
        terms.retain(|t| seen.insert(t.clone()));
        self.docs
            .iter()
            .map(|d| {
                let norm = if self.avg_len > 0.0 {
                    1.0 - self.b + self.b * d.len as f64 / self.avg_len
                } else {
                    1.0
                };
                terms
                    .iter()
                    .filter_map(|t| d.terms.get(t).map(|&tf| (t, tf as f64)))
                    .map(|(t, tf)| self.idf(t) * tf * (self.k1 + 1.0) / (tf + self.k1 * norm))
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub invocation: Invocation,
    pub score: f64,
}

impl Serialize for Candidate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let args: Vec<serde_json::Value> = self
            .invocation
            .args
            .iter()
            .map(|a| serde_json::json!({"name": a.key.to_string(), "value": literal_json::to_json(&a.value)}))
            .collect();
        let mut s = serializer.serialize_struct("Candidate", 4)?;
        s.serialize_field("text", &self.invocation.to_string())?;
        s.serialize_field("operator", &self.invocation.operator)?;
        s.serialize_field("args", &args)?;
        s.serialize_field("score", &self.score)?;
        s.end()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Prediction {
    pub candidates: Vec<Candidate>,
    pub relevant_operators: Vec<String>,
    pub auto_append: Option<Candidate>,
    pub highlighted_params: Vec<String>,
}

impl Prediction {
    /// Orders candidates by score (descending, ties by operator name) and
    /// derives the summary fields from them.
    pub fn from_candidates(mut candidates: Vec<Candidate>) -> Prediction {
        candidates.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.invocation.operator.cmp(&b.invocation.operator))
        });
        let mut relevant: Vec<String> = Vec::new();
        for c in &candidates {
            if !relevant.contains(&c.invocation.operator) {
                relevant.push(c.invocation.operator.clone());
            }
        }
        let auto_append = candidates.first().cloned();
        let highlighted_params = auto_append
            .as_ref()
            .map(|c| {
                c.invocation
                    .args
                    .iter()
                    .filter(|a| a.value.is_mask())
                    .map(|a| a.key.to_string())
                    .collect()
            })
            .unwrap_or_default();
        Prediction {
            candidates,
            relevant_operators: relevant,
            auto_append,
            highlighted_params,
        }
    }
}

/// Top-`n` distinct operators for `query`. Each operator is scored by its
/// best document; that document's invocation is re-grounded against the
/// query so only values the query states stay concrete.
pub fn predict(index: &ResolverIndex, query: &str, n: usize) -> Prediction {
    let scores = index.scores(query);
    // operator -> (score, doc, invocation position); first document wins ties
    let mut best: HashMap<&str, (f64, usize, usize)> = HashMap::new();
    for (d, (&score, doc)) in scores.iter().zip(&index.docs).enumerate() {
        if score <= 0.0 {
            continue;
        }
        for (k, inv) in doc.invocations.iter().enumerate() {
            let entry = best.entry(inv.operator.as_str()).or_insert((score, d, k));
            if score > entry.0 {
                *entry = (score, d, k);
            }
        }
    }
    let mut ranked: Vec<(&str, (f64, usize, usize))> = best.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1 .0
            .partial_cmp(&a.1 .0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let candidates = ranked
        .into_iter()
        .take(n)
        .map(|(_, (score, d, k))| Candidate {
            invocation: ground_explicit_values(query, &index.docs[d].invocations[k]),
            score,
        })
        .collect();
    Prediction::from_candidates(candidates)
}

/// Keyword condition: operator names containing `query`, case-insensitively.
pub fn keyword_mode(registry: &Registry, query: &str) -> Vec<String> {
    registry
        .keyword_filter(query)
        .into_iter()
        .map(|s| s.name.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    TopK,
    Nucleus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub strategy: Strategy,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl DecodeConfig {
    pub fn greedy() -> Self {
        DecodeConfig {
            strategy: Strategy::Greedy,
            n: 1,
            k: None,
            p: None,
            temperature: None,
        }
    }

    pub fn top_k(k: usize, n: usize) -> Self {
        DecodeConfig {
            strategy: Strategy::TopK,
            n,
            k: Some(k),
            p: None,
            temperature: None,
        }
    }

    pub fn nucleus(p: f64, n: usize) -> Self {
        DecodeConfig {
            strategy: Strategy::Nucleus,
            n,
            k: None,
            p: Some(p),
            temperature: None,
        }
    }

    pub fn validate(&self) -> Result<(), ResolverError> {
        let bad = |m: &str| Err(ResolverError::Config(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self
            .temperature
            .is_some_and(|t| t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
        {
            return bad("temperature must be positive");
        }
        match self.strategy {
            Strategy::Greedy if self.n != 1 => {
                bad("greedy decoding yields exactly one candidate (n = 1)")
            }
            Strategy::TopK if !self.k.is_some_and(|k| k >= 1) => {
                bad("top_k decoding requires k >= 1")
            }
            Strategy::Nucleus if !self.p.is_some_and(|p| p > 0.0 && p <= 1.0) => {
                bad("nucleus decoding requires p in (0, 1]")
            }
            _ => Ok(()),
        }
    }
}
