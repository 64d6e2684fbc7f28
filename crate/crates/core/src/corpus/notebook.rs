//! Notebook documents: cells, filters and markdown/code pairing.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::extract_invocations;
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Markdown,
    Code,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotebookCell {
    pub kind: CellKind,
    pub source: String,
    /// Position among all cells of the document, skipped kinds included.
    pub index: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum NotebookError {
    #[error("malformed notebook JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("notebook has no \"cells\" array")]
    NoCells,
    #[error("cell {0}: source is neither a string nor a list of strings")]
    BadSource(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedNotebook {
    pub cells: Vec<NotebookCell>,
    pub warnings: Vec<String>,
}

fn source_text(v: Option<&Value>) -> Option<String> {
    match v {
        None => Some(String::new()),
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Array(parts)) => parts
            .iter()
            .map(|p| p.as_str())
            .collect::<Option<Vec<_>>>()
            .map(|p| p.concat()),
        _ => None,
    }
}

/// Reads the `cells` array of a notebook document in order. Cells of kinds
/// other than markdown and code are skipped with a warning.
pub fn parse_notebook(document: &str) -> Result<ParsedNotebook, NotebookError> {
    let root: Value = serde_json::from_str(document)?;
    let cells = root
        .get("cells")
        .and_then(Value::as_array)
        .ok_or(NotebookError::NoCells)?;
    let mut out = ParsedNotebook::default();
    for (index, cell) in cells.iter().enumerate() {
        let kind = match cell.get("cell_type").and_then(Value::as_str) {
            Some("markdown") => CellKind::Markdown,
            Some("code") => CellKind::Code,
            other => {
                out.warnings.push(format!(
                    "cell {index}: skipped cell of kind {}",
                    other.unwrap_or("<none>")
                ));
                continue;
            }
        };
        let source = source_text(cell.get("source")).ok_or(NotebookError::BadSource(index))?;
        out.cells.push(NotebookCell {
            kind,
            source,
            index,
        });
    }
    Ok(out)
}

static SKLEARN_IMPORT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^\s*(?:from\s+sklearn(?:\.|\s)|import\s+sklearn\b)").unwrap()
});

/// Whether one code cell imports sklearn or calls a registry name.
pub fn is_sklearn_cell(source: &str, registry: &Registry) -> bool {
    SKLEARN_IMPORT.is_match(source) || !extract_invocations(source, registry).invocations.is_empty()
}

pub fn has_sklearn(cells: &[NotebookCell], registry: &Registry) -> bool {
    cells
        .iter()
        .any(|c| c.kind == CellKind::Code && is_sklearn_cell(&c.source, registry))
}

const STOPWORDS: [&str; 50] = [
    "a", "about", "after", "all", "an", "and", "are", "as", "at", "be", "by", "can", "data", "do",
    "for", "from", "has", "have", "how", "if", "in", "into", "is", "it", "its", "let", "model",
    "more", "not", "of", "on", "or", "our", "so", "that", "the", "their", "then", "there", "these",
    "this", "to", "use", "using", "was", "we", "what", "which", "will", "with",
];

/// At least 70% of alphabetic characters are ASCII and a stopword occurs.
pub fn is_english_text(text: &str) -> bool {
    let alpha: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
    if alpha.is_empty() {
        return false;
    }
    let ascii = alpha.iter().filter(|c| c.is_ascii()).count();
    if (ascii as f64) < 0.7 * alpha.len() as f64 {
        return false;
    }
    text.split(|c: char| !c.is_alphanumeric())
        .any(|w| STOPWORDS.contains(&w.to_lowercase().as_str()))
}

/// True iff some markdown cell reads as English.
pub fn is_english(cells: &[NotebookCell]) -> bool {
    cells
        .iter()
        .any(|c| c.kind == CellKind::Markdown && is_english_text(&c.source))
}

/// Markdown with leading heading markers removed from every line, trimmed.
pub fn strip_headings(markdown: &str) -> String {
    markdown
        .lines()
        .map(|l| {
            let t = l.trim_start();
            let rest = t.trim_start_matches('#');
            if rest.len() < t.len() && (rest.is_empty() || rest.starts_with(' ')) {
                rest.trim_start()
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

/// A code cell with the nearest markdown cell before it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPair<'a> {
    pub markdown: &'a NotebookCell,
    pub code: &'a NotebookCell,
}

/// Pairs each sklearn code cell with the nearest preceding markdown cell.
/// Code cells with no markdown before them are dropped.
pub fn pair_cells<'a>(cells: &'a [NotebookCell], registry: &Registry) -> Vec<CellPair<'a>> {
    let mut last_md = None;
    let mut out = Vec::new();
    for c in cells {
        match c.kind {
            CellKind::Markdown => last_md = Some(c),
            CellKind::Code => {
                if let Some(md) = last_md {
                    if is_sklearn_cell(&c.source, registry) {
                        out.push(CellPair {
                            markdown: md,
                            code: c,
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(kind: CellKind, source: &str, index: usize) -> NotebookCell {
        NotebookCell {
            kind,
            source: source.into(),
            index,
        }
    }

    #[test]
    fn parse_joins_and_skips() {
        let doc = r##"{"cells":[
            {"cell_type":"markdown","source":["# Title\n","more"]},
            {"cell_type":"raw","source":"x"},
            {"cell_type":"code","source":"PCA()"}]}"##;
        let nb = parse_notebook(doc).unwrap();
        assert_eq!(nb.cells.len(), 2);
        assert_eq!(nb.cells[0].source, "# Title\nmore");
        assert_eq!(nb.cells[1].index, 2);
        assert_eq!(nb.warnings, ["cell 1: skipped cell of kind raw"]);
        assert!(parse_notebook(r#"{"cells":[]}"#).unwrap().cells.is_empty());
        assert!(parse_notebook("{").is_err());
        assert!(matches!(parse_notebook("{}"), Err(NotebookError::NoCells)));
    }

    #[test]
    fn sklearn_detection() {
        let r = Registry::builtin();
        assert!(is_sklearn_cell("from sklearn.decomposition import PCA", &r));
        assert!(is_sklearn_cell("import sklearn", &r));
        assert!(is_sklearn_cell("PCA(n_components=2)", &r));
        assert!(!is_sklearn_cell(
            "import matplotlib.pyplot as plt\nplt.plot(x)",
            &r
        ));
        assert!(!is_sklearn_cell("from sklearnx import y", &r));
    }

    #[test]
    fn english_heuristic() {
        assert!(is_english_text("Build a model"));
        assert!(!is_english_text("Построение модели и данные"));
        assert!(!is_english_text("PCA"));
        assert!(!is_english(&[cell(CellKind::Code, "x = 1", 0)]));
    }

    #[test]
    fn headings_stripped() {
        assert_eq!(
            strip_headings("## Model # 2 - Decision Trees\n"),
            "Model # 2 - Decision Trees"
        );
        assert_eq!(strip_headings("#hashtag"), "#hashtag");
    }

    #[test]
    fn pairing_uses_nearest_markdown() {
        let r = Registry::builtin();
        let cells = vec![
            cell(CellKind::Code, "PCA()", 0),
            cell(CellKind::Markdown, "first", 1),
            cell(CellKind::Markdown, "second", 2),
            cell(CellKind::Code, "PCA()", 3),
            cell(CellKind::Code, "x = 1", 4),
            cell(CellKind::Code, "StandardScaler()", 5),
        ];
        let pairs = pair_cells(&cells, &r);
        let got: Vec<_> = pairs
            .iter()
            .map(|p| (p.markdown.index, p.code.index))
            .collect();
        assert_eq!(got, [(2, 3), (2, 5)]);
    }
}
