//! Mining notebooks into NL-code pairs and task-formulated samples.

pub mod extract;
pub mod formulate;
pub mod notebook;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use extract::{extract_invocations, extract_with_names, Extraction};
pub use formulate::{
    dedupe_pairs, formulate_all, formulate_sample, formulate_target, ground_explicit_values,
    param_stats, split_corpus, split_sizes, tokenize, CorpusSplits, FormulatedSample, NlCodePair,
    Origin, ParamStats, SplitError, StatsRow, TaskKind, DEFAULT_RATIOS,
};
pub use notebook::{
    has_sklearn, is_english, is_english_text, pair_cells, parse_notebook, strip_headings, CellKind,
    CellPair, NotebookCell, NotebookError, ParsedNotebook,
};

use crate::dsl::{parse_invocations, Invocation};
use crate::registry::Registry;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
    #[error("sample {nb}#{cell}: target does not parse: {message}")]
    Target {
        nb: String,
        cell: usize,
        message: String,
    },
    #[error(transparent)]
    Split(#[from] SplitError),
}

fn io_err(path: &Path, e: impl ToString) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Counts at each stage of a corpus build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub notebooks: usize,
    pub malformed: usize,
    pub without_sklearn: usize,
    pub non_english: usize,
    pub kept_notebooks: usize,
    /// sklearn code cells paired with a preceding markdown cell.
    pub pairs: usize,
    /// Pairs dropped because no invocation was extracted or the NL was empty.
    pub discarded: usize,
    pub duplicates: usize,
    pub unique_pairs: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub summary: BuildSummary,
    pub pairs: Vec<NlCodePair>,
    pub splits: CorpusSplits<NlCodePair>,
    pub stats: ParamStats,
    pub warnings: Vec<String>,
}

/// Pairs mined from one notebook, with its filter outcome.
#[derive(Debug, Default)]
struct NotebookYield {
    malformed: bool,
    without_sklearn: bool,
    non_english: bool,
    pairs: usize,
    kept: Vec<NlCodePair>,
    warnings: Vec<String>,
}

fn mine_notebook(id: &str, text: &str, registry: &Registry) -> NotebookYield {
    let mut y = NotebookYield::default();
    let parsed = match parse_notebook(text) {
        Ok(p) => p,
        Err(e) => {
            y.malformed = true;
            y.warnings.push(format!("{id}: {e}"));
            return y;
        }
    };
    y.warnings
        .extend(parsed.warnings.iter().map(|w| format!("{id}: {w}")));
    if !has_sklearn(&parsed.cells, registry) {
        y.without_sklearn = true;
        return y;
    }
    if !is_english(&parsed.cells) {
        y.non_english = true;
        return y;
    }
    for pair in pair_cells(&parsed.cells, registry) {
        y.pairs += 1;
        let ex = extract_invocations(&pair.code.source, registry);
        y.warnings.extend(
            ex.warnings
                .iter()
                .map(|w| format!("{id} cell {}: {w}", pair.code.index)),
        );
        let nl = strip_headings(&pair.markdown.source);
        if ex.invocations.is_empty() || nl.is_empty() {
            continue;
        }
        y.kept.push(NlCodePair {
            nl,
            invocations: ex.invocations,
            origin: Origin {
                nb: id.to_string(),
                cell: pair.code.index,
            },
        });
    }
    y
}

/// Runs the full pipeline over `(notebook id, document)` inputs:
/// filter, pair, extract, discard, dedupe, split.
pub fn build_corpus(
    notebooks: &[(String, String)],
    registry: &Registry,
    ratios: [f64; 3],
    seed: u64,
) -> Result<BuildOutput, CorpusError> {
    let mut summary = BuildSummary {
        notebooks: notebooks.len(),
        ..Default::default()
    };
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for (id, text) in notebooks {
        let y = mine_notebook(id, text, registry);
        summary.malformed += y.malformed as usize;
        summary.without_sklearn += y.without_sklearn as usize;
        summary.non_english += y.non_english as usize;
        summary.kept_notebooks += !(y.malformed || y.without_sklearn || y.non_english) as usize;
        summary.pairs += y.pairs;
        summary.discarded += y.pairs - y.kept.len();
        warnings.extend(y.warnings);
        kept.extend(y.kept);
    }
    let before = kept.len();
    let pairs = dedupe_pairs(kept);
    summary.duplicates = before - pairs.len();
    summary.unique_pairs = pairs.len();
    let hybrid: Vec<Vec<Invocation>> = pairs
        .iter()
        .map(|p| {
            p.invocations
                .iter()
                .map(|i| ground_explicit_values(&p.nl, i))
                .collect()
        })
        .collect();
    let stats = param_stats(&hybrid);
    let splits = split_corpus(pairs.clone(), ratios, seed)?;
    summary.train = splits.train.len();
    summary.validation = splits.validation.len();
    summary.test = splits.test.len();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(BuildOutput {
        summary,
        pairs,
        splits,
        stats,
        warnings,
    })
}

/// Reads every `.ipynb` file of `dir`, ordered by file name; the id of a
/// notebook is its file stem.
pub fn read_notebook_dir(dir: &Path) -> Result<Vec<(String, String)>, CorpusError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ipynb"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            let id = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            Ok((id, text))
        })
        .collect()
}

fn write_samples(path: &Path, pairs: &[NlCodePair]) -> Result<(), CorpusError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| io_err(path, e))?);
    for p in pairs {
        for s in formulate_all(p) {
            let line = serde_json::to_string(&s).expect("samples serialize");
            writeln!(f, "{line}").map_err(|e| io_err(path, e))?;
        }
    }
    f.flush().map_err(|e| io_err(path, e))
}

/// Stats document written beside the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub summary: BuildSummary,
    pub params: ParamStats,
}

pub fn summary_text(summary: &BuildSummary) -> String {
    let rows = [
        ("notebooks", summary.notebooks),
        ("malformed", summary.malformed),
        ("without sklearn", summary.without_sklearn),
        ("non-English", summary.non_english),
        ("kept notebooks", summary.kept_notebooks),
        ("pairs", summary.pairs),
        ("discarded", summary.discarded),
        ("duplicates", summary.duplicates),
        ("unique pairs", summary.unique_pairs),
        ("train", summary.train),
        ("validation", summary.validation),
        ("test", summary.test),
    ];
    rows.iter()
        .map(|(k, v)| format!("{k:<16}{v:>8}\n"))
        .collect()
}

/// Writes `corpus.jsonl`, the three split files and the stats report.
/// Every file holds all four task formulations of each pair.
pub fn write_corpus(out: &BuildOutput, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_samples(&dir.join("corpus.jsonl"), &out.pairs)?;
    write_samples(&dir.join("train.jsonl"), &out.splits.train)?;
    write_samples(&dir.join("valid.jsonl"), &out.splits.validation)?;
    write_samples(&dir.join("test.jsonl"), &out.splits.test)?;
    let report = StatsReport {
        summary: out.summary.clone(),
        params: out.stats.clone(),
    };
    let json = serde_json::to_string_pretty(&report).expect("stats serialize") + "\n";
    let path = dir.join("stats.json");
    fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    let text = format!("{}\n{}", summary_text(&out.summary), out.stats);
    let path = dir.join("stats.txt");
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

/// Reads a JSON-lines file of formulated samples. Blank lines are ignored.
pub fn read_samples(path: &Path) -> Result<Vec<FormulatedSample>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Record {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses the target of an invocation-task sample.
pub fn sample_invocations(sample: &FormulatedSample) -> Result<Vec<Invocation>, CorpusError> {
    parse_invocations(&sample.target).map_err(|e| CorpusError::Target {
        nb: sample.origin.nb.clone(),
        cell: sample.origin.cell,
        message: e.to_string(),
    })
}

/// Parameter statistics over the HYBRID samples of a sample list.
pub fn stats_from_samples(samples: &[FormulatedSample]) -> Result<ParamStats, CorpusError> {
    let hybrid = samples
        .iter()
        .filter(|s| s.task == TaskKind::Hybrid)
        .map(sample_invocations)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(param_stats(&hybrid))
}
