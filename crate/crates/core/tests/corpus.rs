mod common;
#[path = "common/gen.rs"]
mod gen;

use std::collections::HashSet;
use std::fs;

use common::{fixture_path, reference_pairs, REFERENCE_ROWS};
use lowcode_core::corpus::{
    build_corpus, dedupe_pairs, formulate_all, formulate_sample, formulate_target,
    ground_explicit_values, read_notebook_dir, read_samples, sample_invocations, split_corpus,
    stats_from_samples, write_corpus, FormulatedSample, NlCodePair, Origin, TaskKind,
    DEFAULT_RATIOS,
};
use lowcode_core::dsl::{parse_invocations, ArgValue, Invocation};
use lowcode_core::Registry;
use proptest::prelude::*;
use serde_json::Value;

#[test]
fn reference_rows_reproduce_for_every_task() {
    for (pair, (nl, _, expected)) in reference_pairs().iter().zip(REFERENCE_ROWS) {
        assert_eq!(pair.nl, nl);
        for (task, want) in TaskKind::ALL.into_iter().zip(expected) {
            let got = formulate_sample(pair, task);
            assert_eq!(got.target, want, "{nl} / {task:?}");
            assert_eq!(got.nl, nl);
        }
    }
}

#[test]
fn balanced_class_weight_row() {
    let pair = &reference_pairs()[7];
    let targets: Vec<String> = TaskKind::ALL
        .into_iter()
        .map(|t| formulate_sample(pair, t).target)
        .collect();
    assert_eq!(
        targets,
        [
            "RandomForestClassifier",
            "RandomForestClassifier(n_estimators=100, class_weight='balanced')",
            "RandomForestClassifier(n_estimators=MASK, class_weight=MASK)",
            "RandomForestClassifier(n_estimators=MASK, class_weight='balanced')",
        ]
    );
}

fn reference_jsonl() -> String {
    reference_pairs()
        .iter()
        .flat_map(formulate_all)
        .map(|s| serde_json::to_string(&s).unwrap() + "\n")
        .collect()
}

#[test]
fn reference_index_fixture_is_current() {
    let path = fixture_path("data/fixtures/reference.jsonl");
    let want = reference_jsonl();
    if std::env::var_os("LOWCODE_BLESS").is_some() || !path.exists() {
        fs::write(&path, &want).unwrap();
    }
    assert_eq!(fs::read_to_string(&path).unwrap(), want);
    let samples = read_samples(&path).unwrap();
    assert_eq!(samples.len(), 32);
    assert_eq!(
        samples
            .iter()
            .filter(|s| s.task == TaskKind::Hybrid)
            .count(),
        8
    );
}

#[test]
fn sample_json_shape() {
    let s = formulate_sample(&reference_pairs()[1], TaskKind::Hybrid);
    let v: Value = serde_json::to_value(&s).unwrap();
    assert_eq!(
        v,
        serde_json::json!({
            "nl": "PCA with 2 components",
            "task": "HYBRID",
            "target": "PCA(n_components=2, random_state=MASK)",
            "origin": {"nb": "reference", "cell": 3}
        })
    );
}

#[test]
fn stats_over_reference_rows() {
    let samples: Vec<FormulatedSample> = reference_pairs().iter().flat_map(formulate_all).collect();
    let stats = stats_from_samples(&samples).unwrap();
    assert_eq!(stats.samples, 8);
    let text = stats.to_string();
    assert!(text.starts_with("Parameter Type"), "{text}");
    for label in ["Total", "Named", "Masked", "Valued"] {
        assert!(text.contains(label));
    }
}

fn expected_counts() -> (Value, [f64; 3], u64) {
    let text = fs::read_to_string(fixture_path("data/fixtures/notebooks.expected.json")).unwrap();
    let m: Value = serde_json::from_str(&text).unwrap();
    let r: Vec<f64> = m["ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    (
        m["expected"].clone(),
        [r[0], r[1], r[2]],
        m["seed"].as_u64().unwrap(),
    )
}

#[test]
fn notebook_fixture_matches_hand_count() {
    let (expected, ratios, seed) = expected_counts();
    let notebooks = read_notebook_dir(&fixture_path("data/fixtures/notebooks")).unwrap();
    assert_eq!(notebooks.len(), 12);
    let out = build_corpus(&notebooks, &Registry::builtin(), ratios, seed).unwrap();
    assert_eq!(serde_json::to_value(&out.summary).unwrap(), expected);
    assert!(out
        .warnings
        .iter()
        .any(|w| w.contains("skipped cell of kind raw")));
    assert!(out.warnings.iter().any(|w| w.starts_with("nb11_bad_line")));
    let multi = out
        .pairs
        .iter()
        .find(|p| p.origin.nb == "nb07_multi")
        .unwrap();
    assert_eq!(
        formulate_target(&multi.nl, &multi.invocations, TaskKind::Complete),
        "SimpleImputer(strategy='median')\nMinMaxScaler()"
    );
}

#[test]
fn written_corpus_round_trips() {
    let (_, ratios, seed) = expected_counts();
    let notebooks = read_notebook_dir(&fixture_path("data/fixtures/notebooks")).unwrap();
    let out = build_corpus(&notebooks, &Registry::builtin(), ratios, seed).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&out, dir.path()).unwrap();
    let all = read_samples(&dir.path().join("corpus.jsonl")).unwrap();
    assert_eq!(all.len(), 4 * out.summary.unique_pairs);
    let mut split_total = 0;
    for (file, n) in [
        ("train.jsonl", out.summary.train),
        ("valid.jsonl", out.summary.validation),
        ("test.jsonl", out.summary.test),
    ] {
        let s = read_samples(&dir.path().join(file)).unwrap();
        assert_eq!(s.len(), 4 * n, "{file}");
        split_total += s.len();
    }
    assert_eq!(split_total, all.len());
    for s in all.iter().filter(|s| s.task != TaskKind::Name) {
        sample_invocations(s).unwrap();
    }
    let stats: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["summary"]["unique_pairs"], 12);
    assert!(fs::read_to_string(dir.path().join("stats.txt"))
        .unwrap()
        .contains("Parameter Type"));

    // same inputs, same bytes
    let dir2 = tempfile::tempdir().unwrap();
    let again = build_corpus(&notebooks, &Registry::builtin(), ratios, seed).unwrap();
    write_corpus(&again, dir2.path()).unwrap();
    for f in [
        "corpus.jsonl",
        "train.jsonl",
        "valid.jsonl",
        "test.jsonl",
        "stats.json",
        "stats.txt",
    ] {
        assert_eq!(
            fs::read(dir.path().join(f)).unwrap(),
            fs::read(dir2.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn malformed_only_input() {
    let out = build_corpus(
        &[("bad".into(), "{".into())],
        &Registry::builtin(),
        DEFAULT_RATIOS,
        0,
    );
    assert!(out.is_err(), "an empty corpus cannot be split");
}

/// Puts the COMPLETE value back into every MASK slot of `hybrid`.
fn restore(hybrid: &Invocation, complete: &Invocation) -> Invocation {
    let mut out = hybrid.clone();
    for (h, c) in out.args.iter_mut().zip(&complete.args) {
        assert_eq!(h.key, c.key);
        if h.value.is_mask() {
            h.value = c.value.clone();
        }
    }
    out
}

fn pair_of(nl: String, invocations: Vec<Invocation>) -> NlCodePair {
    NlCodePair {
        nl,
        invocations,
        origin: Origin {
            nb: "gen".into(),
            cell: 0,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hybrid_with_masks_restored_is_complete(
        (nl, invs) in prop::collection::vec(gen::code_invocation(), 1..4).prop_flat_map(gen::nl_for)
    ) {
        let pair = pair_of(nl, invs);
        let complete = formulate_sample(&pair, TaskKind::Complete).target;
        let hybrid = formulate_sample(&pair, TaskKind::Hybrid).target;
        let masked = formulate_sample(&pair, TaskKind::Masked).target;
        let name = formulate_sample(&pair, TaskKind::Name).target;

        let complete_invs = parse_invocations(&complete).unwrap();
        let hybrid_invs = parse_invocations(&hybrid).unwrap();
        prop_assert_eq!(complete_invs.len(), hybrid_invs.len());
        let restored: Vec<String> = hybrid_invs
            .iter()
            .zip(&complete_invs)
            .map(|(h, c)| restore(h, c).to_string())
            .collect();
        prop_assert_eq!(restored.join("\n"), complete);

        for inv in parse_invocations(&masked).unwrap() {
            prop_assert!(inv.args.iter().all(|a| a.value.is_mask()));
        }
        prop_assert!(!name.contains('(') && !name.contains(')'));
    }

    #[test]
    fn grounded_values_are_stated(
        (nl, invs) in prop::collection::vec(gen::code_invocation(), 1..3).prop_flat_map(gen::nl_for)
    ) {
        let words = |t: &str| {
            let w: Vec<String> = t
                .split(|c: char| !c.is_alphanumeric())
                .filter(|w| !w.is_empty())
                .map(str::to_lowercase)
                .collect();
            w.join(" ")
        };
        let padded = format!(" {} ", words(&nl));
        let ws: Vec<&str> = nl.split_whitespace().collect();
        for inv in &invs {
            let g = ground_explicit_values(&nl, inv);
            for (a, orig) in g.args.iter().zip(&inv.args) {
                match &a.value {
                    ArgValue::Mask => {
                        if matches!(orig.value, ArgValue::Int(_) | ArgValue::Real(_)) {
                            let text = orig.value.to_string();
                            prop_assert!(!ws.contains(&text.as_str()), "{} is stated in {:?}", text, nl);
                        }
                    }
                    ArgValue::Bool(_) | ArgValue::None => prop_assert!(false, "never stated: {}", a.value),
                    ArgValue::Str { value: v, .. } | ArgValue::Ref(v) => {
                        let w = words(v);
                        let needle = format!(" {w} ");
                        prop_assert!(!w.is_empty() && padded.contains(&needle));
                    }
                    v => prop_assert!(nl.contains(&v.to_string())),
                }
            }
        }
    }

    #[test]
    fn dedupe_and_formulate_commute(
        picks in prop::collection::vec((0usize..4, 0usize..3), 0..20)
    ) {
        let nls = ["Train a tree", "PCA with 2 components", "Scale the data", "train a tree"];
        let codes = [
            vec![Invocation::new("DecisionTreeClassifier").arg("max_depth", ArgValue::Int(3))],
            vec![Invocation::new("PCA").arg("n_components", ArgValue::Int(2))],
            vec![Invocation::new("StandardScaler"), Invocation::new("PCA")],
        ];
        let pairs: Vec<NlCodePair> = picks
            .iter()
            .enumerate()
            .map(|(i, &(n, c))| NlCodePair {
                nl: nls[n].into(),
                invocations: codes[c].clone(),
                origin: Origin { nb: "p".into(), cell: i },
            })
            .collect();
        for task in TaskKind::ALL {
            let a: Vec<(String, String)> = dedupe_pairs(pairs.clone())
                .iter()
                .map(|p| { let s = formulate_sample(p, task); (s.nl, s.target) })
                .collect();
            let mut seen = HashSet::new();
            let mut b = Vec::new();
            for p in &pairs {
                let s = formulate_sample(p, TaskKind::Complete);
                if seen.insert((s.nl.trim().to_string(), s.target)) {
                    let t = formulate_sample(p, task);
                    b.push((t.nl, t.target));
                }
            }
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn splits_partition_the_input(n in 1usize..200, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let s = split_corpus(items, DEFAULT_RATIOS, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}
