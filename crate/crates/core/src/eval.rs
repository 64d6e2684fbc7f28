//! Top-k accuracy of ranked invocation predictions against gold samples.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{sample_invocations, FormulatedSample, TaskKind};
use crate::dsl::{ArgValue, Invocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Name,
    Invocation,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "name" => Ok(MatchMode::Name),
            "invocation" => Ok(MatchMode::Invocation),
            other => Err(format!(
                "unknown mode '{other}' (expected name or invocation)"
            )),
        }
    }
}

impl std::fmt::Display for MatchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatchMode::Name => "name",
            MatchMode::Invocation => "invocation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub mode: MatchMode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("empty evaluation set")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{0}")]
    Gold(String),
}

/// Same operator, hyper-parameters ignored.
pub fn match_name(candidate: &Invocation, gold: &Invocation) -> bool {
    candidate.operator == gold.operator
}

fn values_match(a: &ArgValue, b: &ArgValue) -> bool {
    match (a, b) {
        (ArgValue::Mask, ArgValue::Mask) => true,
        (ArgValue::Mask, _) | (_, ArgValue::Mask) => false,
        (ArgValue::Str { value: x, .. }, ArgValue::Str { value: y, .. }) => x == y,
        (ArgValue::Bool(x), ArgValue::Bool(y)) => x == y,
        (ArgValue::None, ArgValue::None) => true,
        (ArgValue::Ref(x), ArgValue::Ref(y)) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

/// Same operator and the same set of (parameter, value) pairs in any order.
/// MASK matches only MASK; numbers compare by value.
pub fn match_invocation(candidate: &Invocation, gold: &Invocation) -> bool {
    candidate.operator == gold.operator
        && candidate.args.len() == gold.args.len()
        && candidate.args.iter().all(|c| {
            gold.args
                .iter()
                .any(|g| g.key == c.key && values_match(&c.value, &g.value))
        })
        && gold
            .args
            .iter()
            .all(|g| candidate.args.iter().any(|c| c.key == g.key))
}

fn matches(mode: MatchMode, candidate: &Invocation, gold: &Invocation) -> bool {
    match mode {
        MatchMode::Name => match_name(candidate, gold),
        MatchMode::Invocation => match_invocation(candidate, gold),
    }
}

/// 1-based rank of the first of the top `k` candidates that matches any
/// gold invocation.
pub fn topk_hit(
    candidates: &[Invocation],
    gold: &[Invocation],
    config: &EvalConfig,
) -> Option<usize> {
    candidates
        .iter()
        .take(config.k)
        .position(|c| gold.iter().any(|g| matches(config.mode, c, g)))
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query: String,
    pub gold: Vec<String>,
    pub candidates: Vec<String>,
    pub hit_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: MatchMode,
    pub k: usize,
    pub total: usize,
    pub hits: usize,
    pub accuracy: f64,
    pub records: Vec<EvalRecord>,
}

/// Gold samples of a sample list: its HYBRID samples, or for name mode
/// its NAME samples when no HYBRID ones are present.
fn gold_samples(samples: &[FormulatedSample], mode: MatchMode) -> Vec<&FormulatedSample> {
    let hybrid: Vec<_> = samples
        .iter()
        .filter(|s| s.task == TaskKind::Hybrid)
        .collect();
    if !hybrid.is_empty() || mode == MatchMode::Invocation {
        return hybrid;
    }
    samples
        .iter()
        .filter(|s| s.task == TaskKind::Name)
        .collect()
}

fn gold_invocations(sample: &FormulatedSample) -> Result<Vec<Invocation>, EvalError> {
    if sample.task == TaskKind::Name {
        return Ok(sample
            .target
            .split(" ; ")
            .map(|n| Invocation::new(n.trim()))
            .collect());
    }
    sample_invocations(sample).map_err(|e| EvalError::Gold(e.to_string()))
}

/// Runs `predictor` on every gold sample's NL and scores its ranking.
/// Predictor errors count as misses and are kept in the record.
pub fn evaluate<F>(
    predictor: F,
    samples: &[FormulatedSample],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError>
where
    F: Fn(&str) -> Result<Vec<Invocation>, String>,
{
    if config.k == 0 {
        return Err(EvalError::ZeroK);
    }
    let gold = gold_samples(samples, config.mode);
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut records = Vec::with_capacity(gold.len());
    for s in gold {
        let gold_invs = gold_invocations(s)?;
        let (candidates, error) = match predictor(&s.nl) {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e)),
        };
        records.push(EvalRecord {
            query: s.nl.clone(),
            gold: gold_invs.iter().map(ToString::to_string).collect(),
            candidates: candidates.iter().map(ToString::to_string).collect(),
            hit_rank: topk_hit(&candidates, &gold_invs, config),
            error,
        });
    }
    let hits = records.iter().filter(|r| r.hit_rank.is_some()).count();
    Ok(EvalReport {
        mode: config.mode,
        k: config.k,
        total: records.len(),
        hits,
        accuracy: hits as f64 / records.len() as f64,
        records,
    })
}

/// One row of a comparison table: a model under one decoding config.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub model: String,
    pub config: String,
    pub name: Option<f64>,
    pub invocation: Option<f64>,
}

/// Aligned text table with model/config rows and name/invocation accuracy
/// columns, in percent.
pub fn accuracy_table(rows: &[TableRow]) -> String {
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |a| format!("{:.2}", 100.0 * a));
    let mw = rows
        .iter()
        .map(|r| r.model.len())
        .chain([5])
        .max()
        .unwrap_or(5);
    let cw = rows
        .iter()
        .map(|r| r.config.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<mw$}  {:<cw$}  {:>8}  {:>12}",
        "Model", "Config", "OpName", "OpInvocation"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<mw$}  {:<cw$}  {:>8}  {:>12}",
            r.model,
            r.config,
            pct(r.name),
            pct(r.invocation)
        );
    }
    out
}

impl EvalReport {
    /// The report as a one-row comparison table.
    pub fn table(&self, model: &str) -> String {
        let (name, invocation) = match self.mode {
            MatchMode::Name => (Some(self.accuracy), None),
            MatchMode::Invocation => (None, Some(self.accuracy)),
        };
        accuracy_table(&[TableRow {
            model: model.to_string(),
            config: format!("top-{}", self.k),
            name,
            invocation,
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_invocation;

    fn inv(s: &str) -> Invocation {
        parse_invocation(s).unwrap()
    }

    #[test]
    fn name_matching() {
        assert!(match_name(
            &inv("PCA(n_components=5)"),
            &inv("PCA(n_components=2, random_state=MASK)")
        ));
        assert!(!match_name(
            &inv("RandomForestClassifier()"),
            &inv("RandomForestRegressor()")
        ));
    }

    #[test]
    fn invocation_matching() {
        assert!(match_invocation(
            &inv("RandomForestClassifier(class_weight='balanced', n_estimators=MASK)"),
            &inv("RandomForestClassifier(n_estimators=MASK, class_weight=\"balanced\")"),
        ));
        assert!(!match_invocation(
            &inv("PCA(n_components=2, random_state=MASK)"),
            &inv("PCA(n_components=2)")
        ));
        assert!(!match_invocation(
            &inv("PCA(n_components=MASK)"),
            &inv("PCA(n_components=2)")
        ));
        assert!(match_invocation(
            &inv("LogisticRegression(C=1)"),
            &inv("LogisticRegression(C=1.0)")
        ));
        assert!(match_invocation(&inv("f(X, y)"), &inv("f(X, y)")));
        assert!(!match_invocation(&inv("f(y, X)"), &inv("f(X, y)")));
    }

    #[test]
    fn topk_examples() {
        let cands: Vec<_> = ["A()", "B()", "PCA()", "PCA()", "C()"]
            .iter()
            .map(|s| inv(s))
            .collect();
        let gold = [inv("PCA()")];
        let cfg = |k| EvalConfig {
            k,
            mode: MatchMode::Invocation,
        };
        assert_eq!(topk_hit(&cands, &gold, &cfg(5)), Some(3));
        assert_eq!(topk_hit(&cands, &gold, &cfg(1)), None);
        assert_eq!(topk_hit(&[], &gold, &cfg(5)), None);
    }

    #[test]
    fn table_layout() {
        let t = accuracy_table(&[TableRow {
            model: "bm25".into(),
            config: "top-5".into(),
            name: Some(0.75),
            invocation: None,
        }]);
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines[0], "Model  Config    OpName  OpInvocation");
        assert_eq!(lines[1], "bm25   top-5      75.00             -");
    }
}
