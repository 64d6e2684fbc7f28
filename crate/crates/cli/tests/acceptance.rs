//! Headline acceptance checks: one PASS/FAIL line per criterion with its
//! time budget. Exits non-zero when any check fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
#[path = "../../core/tests/common/gen.rs"]
mod gen;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::{reference_pairs, REFERENCE_ROWS};
use http_body_util::BodyExt;
use lowcode_core::corpus::{
    build_corpus, formulate_sample, read_notebook_dir, read_samples, FormulatedSample, NlCodePair,
    Origin, TaskKind,
};
use lowcode_core::dsl::{
    blocks_to_pipeline, parse_invocations, parse_pipeline, pipeline_to_blocks, serialize_pipeline,
    BlockGraph, Invocation,
};
use lowcode_core::engine::{self, builtin_dataset, TransformState};
use lowcode_core::eval::{evaluate, EvalConfig, MatchMode};
use lowcode_core::resolver::{
    build_index, keyword_mode, predict, ResolverIndex, DEFAULT_B, DEFAULT_K1,
};
use lowcode_core::{Dataset, Frame, Registry, RunResult, Table};
use lowcode_server::{router, AppState, ServerConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::{json, Value};
use tower::ServiceExt;

type Check = Result<(), String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core")
        .join(rel)
}

fn reference_samples() -> Vec<FormulatedSample> {
    read_samples(&core_path("data/fixtures/reference.jsonl")).unwrap()
}

fn reference_index() -> ResolverIndex {
    build_index(&reference_samples(), DEFAULT_K1, DEFAULT_B).unwrap()
}

fn hoi_fidelity() -> Check {
    for (pair, (nl, _, expected)) in reference_pairs().iter().zip(REFERENCE_ROWS) {
        for (task, want) in TaskKind::ALL.into_iter().zip(expected) {
            let got = formulate_sample(pair, task).target;
            ensure(got == want, || {
                format!("{nl} / {task:?}: {got:?} != {want:?}")
            })?;
        }
    }
    let balanced: Vec<String> = TaskKind::ALL
        .into_iter()
        .map(|t| formulate_sample(&reference_pairs()[7], t).target)
        .collect();
    let want = [
        "RandomForestClassifier",
        "RandomForestClassifier(n_estimators=100, class_weight='balanced')",
        "RandomForestClassifier(n_estimators=MASK, class_weight=MASK)",
        "RandomForestClassifier(n_estimators=MASK, class_weight='balanced')",
    ];
    ensure(balanced == want, || format!("balanced row: {balanced:?}"))
}

fn restore(hybrid: &Invocation, complete: &Invocation) -> Invocation {
    let mut out = hybrid.clone();
    for (h, c) in out.args.iter_mut().zip(&complete.args) {
        if h.value.is_mask() {
            h.value = c.value.clone();
        }
    }
    out
}

fn mask_restoration() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::collection::vec(gen::code_invocation(), 1..4).prop_flat_map(gen::nl_for);
    runner
        .run(&strategy, |(nl, invocations)| {
            let pair = NlCodePair {
                nl,
                invocations,
                origin: Origin {
                    nb: "gen".into(),
                    cell: 0,
                },
            };
            let complete = formulate_sample(&pair, TaskKind::Complete).target;
            let hybrid = formulate_sample(&pair, TaskKind::Hybrid).target;
            let c = parse_invocations(&complete).unwrap();
            let h = parse_invocations(&hybrid).unwrap();
            prop_assert_eq!(c.len(), h.len());
            let restored: Vec<String> = h
                .iter()
                .zip(&c)
                .map(|(h, c)| restore(h, c).to_string())
                .collect();
            prop_assert_eq!(restored.join("\n"), complete);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn corpus_fixture() -> Check {
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(core_path("data/fixtures/notebooks.expected.json")).unwrap(),
    )
    .unwrap();
    let r: Vec<f64> = manifest["ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let seed = manifest["seed"].as_u64().unwrap();
    let notebooks = read_notebook_dir(&core_path("data/fixtures/notebooks")).unwrap();
    ensure(notebooks.len() == 12, || {
        format!("{} notebooks", notebooks.len())
    })?;
    let out = build_corpus(&notebooks, &Registry::builtin(), [r[0], r[1], r[2]], seed)
        .map_err(|e| e.to_string())?;
    let got = serde_json::to_value(&out.summary).unwrap();
    ensure(got == manifest["expected"], || {
        format!("{got} != {}", manifest["expected"])
    })
}

fn keyword_baseline() -> Check {
    let m: Value =
        serde_json::from_str(&fs::read_to_string(core_path("data/manifest.json")).unwrap())
            .unwrap();
    let mut want: Vec<String> = m["operators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["name"].as_str().unwrap().to_string())
        .filter(|n| n.to_lowercase().contains("classifier"))
        .collect();
    let mut got = keyword_mode(&Registry::builtin(), "classifier");
    want.sort();
    got.sort();
    ensure(got == want, || format!("{got:?} != {want:?}"))?;
    ensure(got.iter().any(|n| n == "RandomForestClassifier"), || {
        "RandomForestClassifier missing".into()
    })?;
    ensure(!got.iter().any(|n| n == "SVC"), || "SVC included".into())
}

fn fit(src: &str, frame: &Frame) -> (engine::FittedTransform<f64>, Frame) {
    let inv = lowcode_core::dsl::parse_invocation(src).unwrap();
    engine::fit_transform_step(&inv, &Registry::builtin(), frame).unwrap()
}

fn engine_math() -> Check {
    let ds: Dataset = builtin_dataset("nan-iris").unwrap().unwrap();
    let (_, imputed) = fit("SimpleImputer(strategy='mean')", &ds.train.features());
    let (_, scaled) = fit("StandardScaler()", &imputed);
    ensure(scaled.missing_count() == 0, || {
        format!("{} missing cells", scaled.missing_count())
    })?;
    for col in &scaled.columns {
        let v: Vec<f64> = col.cells.iter().map(|c| c.num().unwrap()).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        ensure(mean.abs() < 1e-9, || format!("{}: mean {mean}", col.name))?;
        ensure((sd - 1.0).abs() < 1e-9, || {
            format!("{}: std {sd}", col.name)
        })?;
    }

    let (fitted, projected) = fit("PCA(n_components=2)", &imputed);
    ensure(projected.width() == 2, || {
        format!("PCA gave {} columns", projected.width())
    })?;
    let (full, _) = fit("PCA(n_components=4)", &imputed);
    for state in [&fitted.state, &full.state] {
        let TransformState::Pca { components, .. } = state else {
            return Err("not a PCA state".into());
        };
        for (i, a) in components.iter().enumerate() {
            for (j, b) in components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                ensure((dot - want).abs() < 1e-8, || format!("<c{i},c{j}> = {dot}"))?;
            }
        }
    }

    let res = engine::run_pipeline(
        &ds,
        &parse_pipeline("DummyClassifier()").unwrap(),
        &Registry::builtin(),
        0,
    );
    let labels = |t: &Table| -> Vec<String> {
        t.target_series()
            .cells
            .iter()
            .map(|c| c.label().unwrap())
            .collect()
    };
    let train = labels(&ds.train);
    let mut majority: Option<(&String, usize)> = None;
    for l in &train {
        let c = train.iter().filter(|o| *o == l).count();
        if majority.is_none_or(|(_, bc)| c > bc) {
            majority = Some((l, c));
        }
    }
    let majority = majority.unwrap().0;
    let test = labels(&ds.test);
    let want = test.iter().filter(|l| *l == majority).count() as f64 / test.len() as f64;
    ensure(res.score == Some(want), || {
        format!("dummy score {:?} != {want}", res.score)
    })
}

fn dsl_round_trip() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&(gen::pipeline(), gen::pipeline()), |(ast, prior)| {
            let text = serialize_pipeline(&ast);
            let back = parse_pipeline(&text).unwrap();
            prop_assert_eq!(&back, &ast);
            prop_assert_eq!(serialize_pipeline(&back), text);
            let existing = pipeline_to_blocks(&prior, &BlockGraph::default());
            let graph = pipeline_to_blocks(&ast, &existing);
            prop_assert_eq!(blocks_to_pipeline(&graph).unwrap(), ast.clone());
            let wire = BlockGraph::from_wire(&graph.to_wire()).unwrap();
            prop_assert_eq!(
                pipeline_to_blocks(&blocks_to_pipeline(&wire).unwrap(), &wire),
                wire
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn resolver_self_retrieval() -> Check {
    let idx = reference_index();
    let mut hits = 0;
    for (nl, _, targets) in REFERENCE_ROWS {
        let p = predict(&idx, nl, 1);
        if p.candidates.first().map(|c| c.invocation.operator.as_str()) == Some(targets[0]) {
            hits += 1;
        }
    }
    ensure(hits == 8, || format!("self-retrieval {hits}/8"))?;
    let p = predict(&idx, "PCA with 2 components", 5);
    let top = p.auto_append.as_ref().ok_or("no candidate")?;
    let text = top.invocation.to_string();
    ensure(text == "PCA(n_components=2, random_state=MASK)", || {
        text.clone()
    })?;
    ensure(p.highlighted_params == ["random_state"], || {
        format!("highlighted {:?}", p.highlighted_params)
    })
}

fn eval_oracle() -> Check {
    let expected: Value = serde_json::from_str(
        &fs::read_to_string(core_path("data/fixtures/eval20.expected.json")).unwrap(),
    )
    .unwrap();
    let idx = reference_index();
    let samples = read_samples(&core_path("data/fixtures/eval20.test.jsonl")).unwrap();
    ensure(samples.len() == 20, || format!("{} samples", samples.len()))?;
    let bm25 = |n| {
        let idx = &idx;
        move |q: &str| -> Result<Vec<Invocation>, String> {
            Ok(predict(idx, q, n)
                .candidates
                .into_iter()
                .map(|c| c.invocation)
                .collect())
        }
    };
    for k in [1, 5] {
        let mut acc = Vec::new();
        for mode in [MatchMode::Name, MatchMode::Invocation] {
            let r =
                evaluate(bm25(k), &samples, &EvalConfig { k, mode }).map_err(|e| e.to_string())?;
            let e = &expected[format!("{mode}@{k}")];
            ensure(r.hits as u64 == e["hits"].as_u64().unwrap(), || {
                format!("{mode}@{k}: {} hits, oracle {}", r.hits, e["hits"])
            })?;
            ensure(r.accuracy == e["accuracy"].as_f64().unwrap(), || {
                format!("{mode}@{k}: accuracy {}", r.accuracy)
            })?;
            acc.push(r.accuracy);
        }
        ensure(acc[0] >= acc[1], || {
            format!("k={k}: name {} < invocation {}", acc[0], acc[1])
        })?;
    }
    for k in 1..5 {
        for mode in [MatchMode::Name, MatchMode::Invocation] {
            let a = evaluate(bm25(5), &samples, &EvalConfig { k, mode }).unwrap();
            let b = evaluate(bm25(5), &samples, &EvalConfig { k: k + 1, mode }).unwrap();
            ensure(b.accuracy >= a.accuracy, || {
                format!("{mode}: k={k} beats k={}", k + 1)
            })?;
        }
    }
    Ok(())
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

fn run_result(v: &Value) -> Check {
    let run: RunResult = serde_json::from_value(v.clone()).map_err(|e| format!("run: {e}"))?;
    if let Some(s) = run.score {
        ensure((0.0..=1.0).contains(&s), || format!("score {s}"))?;
    }
    ensure(run.before.target == "species", || "before target".into())
}

fn palette(v: &Value, filtered: bool) -> Check {
    ensure(v["filtered"] == filtered, || {
        format!("palette filtered: {v}")
    })?;
    for op in v["operators"].as_array().ok_or("palette operators")? {
        ensure(
            op["name"].is_string()
                && op["kind"].is_string()
                && op["color"].is_string()
                && op["executable"].is_boolean(),
            || format!("palette entry {op}"),
        )?;
    }
    Ok(())
}

/// create, NL query, three-step put, palette reset. Returns every response
/// body for the rerun comparison.
async fn scripted_session(app: &Router) -> Result<Vec<Vec<u8>>, String> {
    let mut bodies = Vec::new();
    let parse = |b: &[u8]| -> Result<Value, String> {
        serde_json::from_slice(b).map_err(|e| e.to_string())
    };

    let (st, b) = call(
        app,
        Method::POST,
        "/sessions",
        Some(json!({"dataset": "nan-iris", "mode": "nl"})),
    )
    .await;
    ensure(st == StatusCode::CREATED, || format!("create: {st}"))?;
    let v = parse(&b)?;
    let id = v["id"].as_str().ok_or("id")?.to_string();
    ensure(v["before"]["columns"].is_array(), || "before".into())?;
    ensure(v["graph"] == json!({"blocks": [], "chain": []}), || {
        "graph".into()
    })?;
    palette(&v["palette"], false)?;
    let full = v["palette"].clone();
    bodies.push(b);

    let (st, b) = call(
        app,
        Method::POST,
        &format!("/sessions/{id}/query"),
        Some(json!({"text": "PCA with 2 components"})),
    )
    .await;
    ensure(st == StatusCode::OK, || format!("query: {st}"))?;
    let v = parse(&b)?;
    ensure(
        v["appended"]["text"] == "PCA(n_components=2, random_state=None)",
        || format!("appended {}", v["appended"]),
    )?;
    ensure(
        v["appended"]["highlighted"] == json!(["random_state"]),
        || "highlighted".into(),
    )?;
    ensure(
        v["prediction"]["candidates"]
            .as_array()
            .is_some_and(|c| c.len() <= 5),
        || "candidates".into(),
    )?;
    ensure(
        v["graph"]["chain"].as_array().map(Vec::len) == Some(1),
        || "chain".into(),
    )?;
    palette(&v["palette"], true)?;
    run_result(&v["run"])?;
    bodies.push(b);

    let chain = json!({
        "blocks": [
            {"id": "b1", "operator": "SimpleImputer", "args": [{"name": "strategy", "value": "mean"}], "x": 0.0, "y": 0.0},
            {"id": "b2", "operator": "StandardScaler", "args": [], "x": 0.0, "y": 0.0},
            {"id": "b3", "operator": "DecisionTreeClassifier", "args": [], "x": 0.0, "y": 0.0},
        ],
        "chain": ["b1", "b2", "b3"]
    });
    let (st, b) = call(
        app,
        Method::PUT,
        &format!("/sessions/{id}/pipeline"),
        Some(chain),
    )
    .await;
    ensure(st == StatusCode::OK, || format!("put: {st}"))?;
    let v = parse(&b)?;
    ensure(
        v["pipeline"]
            == "SimpleImputer(strategy='mean') >> StandardScaler() >> DecisionTreeClassifier()",
        || format!("pipeline {}", v["pipeline"]),
    )?;
    ensure(v["diagnostics"] == json!([]), || {
        format!("diagnostics {}", v["diagnostics"])
    })?;
    run_result(&v["run"])?;
    let run: RunResult = serde_json::from_value(v["run"].clone()).unwrap();
    ensure(
        run.after.as_ref().is_some_and(|a| a.missing_cells() == 0),
        || "after has missing cells".into(),
    )?;
    ensure(run.score.is_some(), || "no score".into())?;
    bodies.push(b);

    let (st, b) = call(
        app,
        Method::POST,
        &format!("/sessions/{id}/palette/reset"),
        None,
    )
    .await;
    ensure(st == StatusCode::OK, || format!("reset: {st}"))?;
    let v = parse(&b)?;
    palette(&v, false)?;
    ensure(v == full, || {
        "reset palette differs from the initial one".into()
    })?;
    bodies.push(b);

    let (_, b) = call(app, Method::GET, &format!("/sessions/{id}/palette"), None).await;
    ensure(parse(&b)? == full, || "palette after reset".into())?;
    Ok(bodies)
}

fn fresh_app() -> Router {
    router(AppState::new(
        Registry::builtin(),
        reference_index(),
        ServerConfig::default(),
    ))
}

fn api_contract() -> Check {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    rt.block_on(async {
        let first = scripted_session(&fresh_app()).await?;
        let second = scripted_session(&fresh_app()).await?;
        ensure(first == second, || {
            "seeded rerun is not byte-identical".into()
        })
    })
}

fn main() {
    let checks: [Criterion; 9] = [
        ("hoi_fidelity", Duration::from_secs(1), hoi_fidelity),
        (
            "mask_restoration",
            Duration::from_secs(10),
            mask_restoration,
        ),
        ("corpus_fixture", Duration::from_secs(5), corpus_fixture),
        ("keyword_baseline", Duration::from_secs(5), keyword_baseline),
        ("engine_math", Duration::from_secs(10), engine_math),
        ("dsl_round_trip", Duration::from_secs(10), dsl_round_trip),
        (
            "resolver_self_retrieval",
            Duration::from_secs(1),
            resolver_self_retrieval,
        ),
        ("eval_oracle", Duration::from_secs(5), eval_oracle),
        ("api_contract", Duration::from_secs(30), api_contract),
    ];
    // keep assertion noise out of the report
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(msg)
            })
            .and_then(|()| {
                let t = start.elapsed();
                ensure(t <= budget, || format!("took {t:.2?}, budget {budget:?}"))
            });
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name:<24} {t:>7.3}s  (budget {}s)", budget.as_secs()),
            Err(e) => {
                failed += 1;
                println!(
                    "FAIL  {name:<24} {t:>7.3}s  (budget {}s)  {e}",
                    budget.as_secs()
                );
            }
        }
    }
    println!("{} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
