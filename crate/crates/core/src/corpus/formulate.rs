//! Task formulations, value grounding, deduplication, splits and
//! hyper-parameter statistics.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{format_real, serialize_invocations, ArgKey, ArgValue, Invocation};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub nb: String,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlCodePair {
    pub nl: String,
    pub invocations: Vec<Invocation>,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Name,
    Complete,
    Masked,
    Hybrid,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Name,
        TaskKind::Complete,
        TaskKind::Masked,
        TaskKind::Hybrid,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulatedSample {
    pub nl: String,
    pub task: TaskKind,
    pub target: String,
    pub origin: Origin,
}

/// Lowercase alphanumeric runs of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Tokens that may spell a number: runs of alphanumerics, '.' and '-',
/// without trailing punctuation.
fn number_tokens(text: &str) -> HashSet<&str> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '.' || c == '-'))
        .map(|t| t.trim_end_matches(['.', '-']))
        .filter(|t| !t.is_empty())
        .collect()
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn is_stated(value: &ArgValue, words: &[String], numbers: &HashSet<&str>) -> bool {
    match value {
        ArgValue::Int(i) => numbers.contains(i.to_string().as_str()),
        ArgValue::Real(r) => numbers.contains(format_real(*r).as_str()),
        ArgValue::Str { value, .. } => contains_sequence(words, &tokenize(value)),
        ArgValue::Ref(name) => contains_sequence(words, &tokenize(name)),
        ArgValue::Bool(_) | ArgValue::None | ArgValue::Mask => false,
    }
}

/// Keeps each argument value that the NL states explicitly and masks the
/// rest.
pub fn ground_explicit_values(nl: &str, invocation: &Invocation) -> Invocation {
    let words = tokenize(nl);
    let numbers = number_tokens(nl);
    let mut out = invocation.clone();
    for arg in &mut out.args {
        if !is_stated(&arg.value, &words, &numbers) {
            arg.value = ArgValue::Mask;
        }
    }
    out
}

/// Target text of `pair` under `task`.
pub fn formulate_target(nl: &str, invocations: &[Invocation], task: TaskKind) -> String {
    match task {
        TaskKind::Name => invocations
            .iter()
            .map(|i| i.operator.as_str())
            .collect::<Vec<_>>()
            .join(" ; "),
        TaskKind::Complete => serialize_invocations(invocations),
        TaskKind::Masked => serialize_invocations(
            &invocations
                .iter()
                .map(Invocation::masked)
                .collect::<Vec<_>>(),
        ),
        TaskKind::Hybrid => serialize_invocations(
            &invocations
                .iter()
                .map(|i| ground_explicit_values(nl, i))
                .collect::<Vec<_>>(),
        ),
    }
}

pub fn formulate_sample(pair: &NlCodePair, task: TaskKind) -> FormulatedSample {
    FormulatedSample {
        nl: pair.nl.clone(),
        task,
        target: formulate_target(&pair.nl, &pair.invocations, task),
        origin: pair.origin.clone(),
    }
}

/// One sample per task kind, in NAME, COMPLETE, MASKED, HYBRID order.
pub fn formulate_all(pair: &NlCodePair) -> Vec<FormulatedSample> {
    TaskKind::ALL
        .iter()
        .map(|&t| formulate_sample(pair, t))
        .collect()
}

/// Keeps the first pair for each (trimmed NL, serialized code) key.
pub fn dedupe_pairs(pairs: Vec<NlCodePair>) -> Vec<NlCodePair> {
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .filter(|p| {
            seen.insert((
                p.nl.trim().to_string(),
                serialize_invocations(&p.invocations),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("cannot split an empty corpus")]
    Empty,
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplits<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.88, 0.06, 0.06];

/// Split sizes for `n` items. Each split with a nonzero ratio receives at
/// least one item when there are enough to go round; the remainder is
/// handed out by largest fractional part, earlier splits first on ties.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let nonzero = ratios.iter().filter(|&&r| r > 0.0).count();
    if n >= nonzero {
        for i in 0..3 {
            if ratios[i] > 0.0 && sizes[i] == 0 {
                sizes[i] = 1;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).expect("finite quotas").then(a.cmp(&b))
    });
    let mut total: usize = sizes.iter().sum();
    let mut k = 0;
    while total < n {
        let i = order[k % 3];
        if ratios[i] > 0.0 {
            sizes[i] += 1;
            total += 1;
        }
        k += 1;
    }
    while total > n {
        let mut largest = 0;
        for i in 1..3 {
            if sizes[i] > sizes[largest] {
                largest = i;
            }
        }
        sizes[largest] -= 1;
        total -= 1;
    }
    sizes
}

/// Seeded shuffle followed by a contiguous train/validation/test partition.
pub fn split_corpus<T>(
    items: Vec<T>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<CorpusSplits<T>, SplitError> {
    if items.is_empty() {
        return Err(SplitError::Empty);
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SplitError::BadRatios(ratios));
    }
    let mut items = items;
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [a, b, _] = split_sizes(items.len(), ratios);
    let test = items.split_off(a + b);
    let validation = items.split_off(a);
    Ok(CorpusSplits {
        train: items,
        validation,
        test,
        ratios,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub category: String,
    /// Samples with 0, 1-3 and 4+ parameters of this category.
    pub counts: [usize; 3],
    pub percent: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub samples: usize,
    pub buckets: [String; 3],
    pub rows: Vec<StatsRow>,
}

fn bucket(n: usize) -> usize {
    match n {
        0 => 0,
        1..=3 => 1,
        _ => 2,
    }
}

/// Distribution of hyper-parameter counts over HYBRID invocation lists.
/// Positional arguments count towards Total but not Named.
pub fn param_stats(samples: &[Vec<Invocation>]) -> ParamStats {
    type Counter = fn(&crate::dsl::Arg) -> bool;
    let categories: [(&str, Counter); 4] = [
        ("Total", |_| true),
        ("Named", |a| matches!(a.key, ArgKey::Named(_))),
        ("Masked", |a| a.value.is_mask()),
        ("Valued", |a| !a.value.is_mask()),
    ];
    let rows = categories
        .iter()
        .map(|(name, pred)| {
            let mut counts = [0usize; 3];
            for invs in samples {
                let n = invs
                    .iter()
                    .flat_map(|i| &i.args)
                    .filter(|a| pred(a))
                    .count();
                counts[bucket(n)] += 1;
            }
            let percent = counts.map(|c| {
                if samples.is_empty() {
                    0.0
                } else {
                    100.0 * c as f64 / samples.len() as f64
                }
            });
            StatsRow {
                category: name.to_string(),
                counts,
                percent,
            }
        })
        .collect();
    ParamStats {
        samples: samples.len(),
        buckets: ["0".into(), "1-3".into(), "4+".into()],
        rows,
    }
}

impl fmt::Display for ParamStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16}{:>8}{:>8}{:>8}",
            "Parameter Type", self.buckets[0], self.buckets[1], self.buckets[2]
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16}{:>8.2}{:>8.2}{:>8.2}",
                r.category, r.percent[0], r.percent[1], r.percent[2]
            )?;
        }
        Ok(())
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
    fn tokenize_examples() {
        assert_eq!(
            tokenize("PCA with 2 components"),
            ["pca", "with", "2", "components"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("class_weight='balanced'"),
            ["class", "weight", "balanced"]
        );
    }

    #[test]
    fn grounding_examples() {
        let g = |nl: &str, s: &str| ground_explicit_values(nl, &inv(s)).to_string();
        assert_eq!(
            g(
                "Random forest with balanced class weight",
                "RandomForestClassifier(n_estimators=100, class_weight='balanced')"
            ),
            "RandomForestClassifier(n_estimators=MASK, class_weight='balanced')"
        );
        assert_eq!(
            g(
                "PCA with 2 components",
                "PCA(n_components=2, random_state=42)"
            ),
            "PCA(n_components=2, random_state=MASK)"
        );
        assert_eq!(
            g("Encoding categorical features", "OneHotEncoder()"),
            "OneHotEncoder()"
        );
        assert_eq!(
            g("use 0.5 and -1.", "X(a=0.5, b=-1, c=5)"),
            "X(a=0.5, b=-1, c=MASK)"
        );
        assert_eq!(
            g("keep True None", "X(a=True, b=None)"),
            "X(a=MASK, b=MASK)"
        );
        assert_eq!(
            g(
                "impute the most frequent value",
                "SimpleImputer(strategy='most_frequent')"
            ),
            "SimpleImputer(strategy='most_frequent')"
        );
        // numbers must be whole tokens
        assert_eq!(g("top 20 results", "X(a=2)"), "X(a=MASK)");
    }

    #[test]
    fn split_size_examples() {
        assert_eq!(split_sizes(100, [0.8, 0.1, 0.1]), [80, 10, 10]);
        assert_eq!(split_sizes(10, DEFAULT_RATIOS), [8, 1, 1]);
        assert_eq!(split_sizes(3, DEFAULT_RATIOS), [1, 1, 1]);
        assert_eq!(split_sizes(1, DEFAULT_RATIOS), [1, 0, 0]);
        assert_eq!(split_sizes(7, [1.0, 0.0, 0.0]), [7, 0, 0]);
    }

    #[test]
    fn split_is_deterministic_partition() {
        let a = split_corpus((0..100).collect(), [0.8, 0.1, 0.1], 7).unwrap();
        let b = split_corpus((0..100).collect(), [0.8, 0.1, 0.1], 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            (a.train.len(), a.validation.len(), a.test.len()),
            (80, 10, 10)
        );
        let mut all: Vec<i32> = a
            .train
            .iter()
            .chain(&a.validation)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(
            split_corpus(Vec::<i32>::new(), DEFAULT_RATIOS, 0),
            Err(SplitError::Empty)
        );
        assert!(split_corpus(vec![1], [0.5, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = param_stats(&[vec![inv("PCA(n_components=2, random_state=MASK)")]]);
        let row = |n: &str| s.rows.iter().find(|r| r.category == n).unwrap().percent;
        assert_eq!(row("Valued"), [0.0, 100.0, 0.0]);
        assert_eq!(row("Masked"), [0.0, 100.0, 0.0]);
        let s = param_stats(&[vec![inv("OneHotEncoder()")]]);
        assert!(s.rows.iter().all(|r| r.percent == [100.0, 0.0, 0.0]));
        assert_eq!(s.buckets, ["0", "1-3", "4+"]);
        let named = param_stats(&[vec![inv("f(X, y, test_size=MASK)")]]);
        assert_eq!(named.rows[1].counts, [0, 1, 0]);
        assert!(named.to_string().starts_with("Parameter Type"));
    }

    #[test]
    fn dedupe_keeps_first() {
        let p = |nl: &str, code: &str, cell| NlCodePair {
            nl: nl.into(),
            invocations: vec![inv(code)],
            origin: Origin {
                nb: "n".into(),
                cell,
            },
        };
        let out = dedupe_pairs(vec![
            p("a", "PCA()", 0),
            p(" a ", "PCA()", 1),
            p("a", "PCA(n_components=2)", 2),
            p("b", "PCA()", 3),
        ]);
        let cells: Vec<_> = out.iter().map(|p| p.origin.cell).collect();
        assert_eq!(cells, [0, 2, 3]);
    }
}
