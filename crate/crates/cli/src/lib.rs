//! The `lowcode` command line: corpus building, evaluation, prediction,
//! offline runs and the HTTP server.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lowcode_core::corpus::{
    build_corpus, read_notebook_dir, read_samples, stats_from_samples, summary_text, write_corpus,
};
use lowcode_core::dsl::parse_pipeline;
use lowcode_core::engine::{builtin_dataset, builtin_names, run_pipeline};
use lowcode_core::eval::{evaluate, EvalConfig, MatchMode};
use lowcode_core::resolver::{build_index, predict, ResolverIndex, DEFAULT_B, DEFAULT_K1};
use lowcode_core::{Dataset, Registry};
use lowcode_server::{AppState, ServerConfig};

#[derive(Parser, Debug)]
#[command(name = "lowcode", version, about = "Low-code ML workbench tools")]
pub struct Cli {
    /// Operator manifest (JSON); the built-in manifest when omitted.
    #[arg(long, global = true, env = "LOWCODE_MANIFEST", value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine notebooks into a task-formulated corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Top-k accuracy of the retrieval resolver on a test split.
    Eval(EvalArgs),
    /// Ranked operator invocations for one query.
    Predict(PredictArgs),
    /// Fit a pipeline on a dataset and print the After preview and score.
    Run(RunArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand, Debug)]
enum CorpusCommand {
    /// Build corpus.jsonl, train/valid/test.jsonl and stats from notebooks.
    Build(BuildArgs),
    /// Hyper-parameter distribution of the HYBRID samples in a corpus file.
    Stats {
        /// Samples file (JSON lines).
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Directory of .ipynb files.
    #[arg(long, value_name = "DIR")]
    notebooks: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Shuffle seed for the splits.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train, validation and test ratios.
    #[arg(long, value_name = "A,B,C", value_parser = parse_ratios, default_value = "0.88,0.06,0.06")]
    ratios: Ratios,
}

#[derive(Clone, Copy, Debug)]
struct Ratios([f64; 3]);

fn parse_ratios(s: &str) -> Result<Ratios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err("expected three comma-separated ratios".into());
    };
    Ok(Ratios([a, b, c]))
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Samples file the resolver indexes (JSON lines).
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Test samples (JSON lines).
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    /// Candidates considered per query.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Match operator names only, or whole invocations.
    #[arg(long, value_parser = ["name", "invocation"])]
    mode: String,
    /// Also write the full JSON report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    #[arg(long)]
    query: String,
    /// Number of candidates.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Print the prediction as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in dataset name, or a name under --datasets.
    #[arg(long)]
    dataset: String,
    /// Pipeline text, e.g. "SimpleImputer() >> StandardScaler()".
    #[arg(long)]
    pipeline: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory with <name>.train.csv, <name>.test.csv and <name>.meta.json.
    #[arg(long, value_name = "DIR")]
    datasets: Option<PathBuf>,
    /// Print the run result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8000)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Samples file the resolver indexes (JSON lines).
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Extra dataset directory.
    #[arg(long, value_name = "DIR")]
    datasets: Option<PathBuf>,
    /// Persist sessions as JSON snapshots here.
    #[arg(long, value_name = "DIR")]
    snapshots: Option<PathBuf>,
    /// Append NL queries to this local JSON-lines file.
    #[arg(long, value_name = "FILE")]
    query_log: Option<PathBuf>,
}

fn load_registry(path: Option<&Path>) -> anyhow::Result<Registry> {
    match path {
        Some(p) => {
            Registry::load_manifest(p).with_context(|| format!("loading manifest {}", p.display()))
        }
        None => Ok(Registry::builtin()),
    }
}

fn load_index(path: &Path) -> anyhow::Result<ResolverIndex> {
    let samples = read_samples(path)?;
    Ok(build_index(&samples, DEFAULT_K1, DEFAULT_B)?)
}

fn load_dataset(name: &str, dir: Option<&Path>) -> anyhow::Result<Dataset> {
    if let Some(ds) = builtin_dataset::<f64>(name) {
        return Ok(ds?);
    }
    match dir {
        Some(d) => Dataset::load(d, name).with_context(|| format!("loading dataset '{name}'")),
        None => bail!(
            "unknown dataset '{name}' (built-in: {})",
            builtin_names().join(", ")
        ),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Corpus(CorpusCommand::Build(a)) => {
            let registry = load_registry(cli.manifest.as_deref())?;
            let notebooks = read_notebook_dir(&a.notebooks)?;
            let built = build_corpus(&notebooks, &registry, a.ratios.0, a.seed)?;
            write_corpus(&built, &a.out)?;
            write!(out, "{}\n{}", summary_text(&built.summary), built.stats)?;
        }
        Command::Corpus(CorpusCommand::Stats { input }) => {
            let samples = read_samples(&input)?;
            write!(out, "{}", stats_from_samples(&samples)?)?;
        }
        Command::Eval(a) => {
            let index = load_index(&a.index)?;
            let samples = read_samples(&a.test)?;
            let mode: MatchMode = a.mode.parse().map_err(anyhow::Error::msg)?;
            let k = a.k as usize;
            let report = evaluate(
                |q| {
                    Ok(predict(&index, q, k)
                        .candidates
                        .into_iter()
                        .map(|c| c.invocation)
                        .collect())
                },
                &samples,
                &EvalConfig { k, mode },
            )?;
            if let Some(path) = &a.report {
                let json = serde_json::to_string_pretty(&report)? + "\n";
                std::fs::write(path, json)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            write!(out, "{}", report.table("bm25"))?;
            writeln!(out, "hits {}/{}", report.hits, report.total)?;
        }
        Command::Predict(a) => {
            let index = load_index(&a.index)?;
            let p = predict(&index, &a.query, a.k as usize);
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&p)?)?;
            } else {
                for (i, c) in p.candidates.iter().enumerate() {
                    writeln!(out, "{}\t{:.6}\t{}", i + 1, c.score, c.invocation)?;
                }
            }
        }
        Command::Run(a) => {
            let registry = load_registry(cli.manifest.as_deref())?;
            let dataset = load_dataset(&a.dataset, a.datasets.as_deref())?;
            let ast = parse_pipeline(&a.pipeline)?;
            let result = run_pipeline(&dataset, &ast, &registry, a.seed);
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
            } else {
                for d in &result.diagnostics {
                    writeln!(out, "{d}")?;
                }
                if let Some(after) = &result.after {
                    writeln!(
                        out,
                        "after: {} rows x {} feature columns, {} missing cells",
                        after.total_rows,
                        after.feature_count(),
                        after.missing_cells()
                    )?;
                    write!(out, "{after}")?;
                }
                match result.score {
                    Some(s) => writeln!(out, "score: {s:.6}")?,
                    None => writeln!(out, "score: none")?,
                }
            }
            if lowcode_core::diagnostic::has_errors(&result.diagnostics) {
                bail!("pipeline did not run cleanly");
            }
        }
        Command::Serve(a) => {
            let registry = load_registry(cli.manifest.as_deref())?;
            let index = load_index(&a.index)?;
            let config = ServerConfig {
                dataset_dir: a.datasets,
                snapshot_dir: a.snapshots,
                query_log: a.query_log,
                ..ServerConfig::default()
            };
            let addr = SocketAddr::new(a.host, a.port);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                log::info!("listening on http://{}", listener.local_addr()?);
                lowcode_server::serve(listener, AppState::new(registry, index, config)).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}

/// Parses `argv` and runs it. Returns the exit code: 0 on success, 1 on a
/// domain error, 2 on a usage error.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}
