use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell<S> {
    Num(S),
    Cat(String),
    Missing,
}

impl<S: Scalar> Cell<S> {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn num(&self) -> Option<S> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    /// Class label text of a target cell.
    pub fn label(&self) -> Option<String> {
        match self {
            Cell::Num(x) => Some(x.to_string()),
            Cell::Cat(s) => Some(s.clone()),
            Cell::Missing => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(x.as_f64())
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Cat(s) => serde_json::Value::String(s.clone()),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

/// One named, typed column.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<S> {
    pub name: String,
    pub kind: ColumnKind,
    pub cells: Vec<Cell<S>>,
}

impl<S: Scalar> Series<S> {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<S>>) -> Self {
        Series {
            name: name.into(),
            kind: ColumnKind::Numeric,
            cells: values
                .into_iter()
                .map(|v| v.map_or(Cell::Missing, Cell::Num))
                .collect(),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<&str>>) -> Self {
        Series {
            name: name.into(),
            kind: ColumnKind::Categorical,
            cells: values
                .into_iter()
                .map(|v| v.map_or(Cell::Missing, |s| Cell::Cat(s.to_string())))
                .collect(),
        }
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// Values of a numeric column with missing cells skipped.
    pub fn present_values(&self) -> Vec<S> {
        self.cells.iter().filter_map(Cell::num).collect()
    }

    fn as_categorical(&self) -> Series<S> {
        Series {
            name: self.name.clone(),
            kind: ColumnKind::Categorical,
            cells: self
                .cells
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => Cell::Cat(x.to_string()),
                    other => other.clone(),
                })
                .collect(),
        }
    }
}

/// Feature columns without a target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame<S> {
    pub columns: Vec<Series<S>>,
    /// Number of rows; kept explicitly so zero-column frames have a height.
    pub n_rows: usize,
}

impl<S: Scalar> Frame<S> {
    pub fn new(columns: Vec<Series<S>>, n_rows: usize) -> Result<Self, TableError> {
        for c in &columns {
            if c.cells.len() != n_rows {
                return Err(TableError::Ragged {
                    column: c.name.clone(),
                    expected: n_rows,
                    found: c.cells.len(),
                });
            }
            if c.kind == ColumnKind::Numeric && c.cells.iter().any(|x| matches!(x, Cell::Cat(_))) {
                return Err(TableError::MixedColumn(c.name.clone()));
            }
        }
        Ok(Frame { columns, n_rows })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(Series::missing_count).sum()
    }

    pub fn schema(&self) -> Vec<(String, ColumnKind)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.kind))
            .collect()
    }

    /// Row-major numeric matrix, or `None` if any cell is not a number.
    pub fn numeric_rows(&self) -> Option<Vec<Vec<S>>> {
        (0..self.n_rows)
            .map(|r| self.columns.iter().map(|c| c.cells[r].num()).collect())
            .collect()
    }

    pub fn from_numeric_rows(names: Vec<String>, rows: &[Vec<S>]) -> Self {
        let columns = names
            .into_iter()
            .enumerate()
            .map(|(j, name)| Series {
                name,
                kind: ColumnKind::Numeric,
                cells: rows.iter().map(|r| Cell::Num(r[j])).collect(),
            })
            .collect();
        Frame {
            columns,
            n_rows: rows.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("column '{column}' has {found} cells, expected {expected}")]
    Ragged {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("numeric column '{0}' contains a non-numeric cell")]
    MixedColumn(String),
    #[error("target column '{0}' not found")]
    MissingTarget(String),
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("train and test schemas differ: {0}")]
    SchemaMismatch(String),
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A rectangular table with one designated target column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<S> {
    columns: Vec<Series<S>>,
    n_rows: usize,
    target: String,
}

impl<S: Scalar> Table<S> {
    pub fn new(columns: Vec<Series<S>>, target: impl Into<String>) -> Result<Self, TableError> {
        let target = target.into();
        let n_rows = columns.first().map_or(0, |c| c.cells.len());
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
        }
        Frame::new(columns.clone(), n_rows)?;
        if !columns.iter().any(|c| c.name == target) {
            return Err(TableError::MissingTarget(target));
        }
        Ok(Table {
            columns,
            n_rows,
            target,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Series<S>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Series<S>> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn target_series(&self) -> &Series<S> {
        self.column(&self.target)
            .expect("target exists by construction")
    }

    /// Feature columns in their original order.
    pub fn features(&self) -> Frame<S> {
        Frame {
            columns: self
                .columns
                .iter()
                .filter(|c| c.name != self.target)
                .cloned()
                .collect(),
            n_rows: self.n_rows,
        }
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(Series::missing_count).sum()
    }

    /// Reassembles a table from a target column and transformed features.
    pub fn with_features(&self, features: Frame<S>) -> Table<S> {
        let mut columns = vec![self.target_series().clone()];
        columns.extend(features.columns);
        Table {
            columns,
            n_rows: self.n_rows,
            target: self.target.clone(),
        }
    }

    /// The first `n` rows with the target column leftmost.
    pub fn preview(&self, n: usize) -> Preview {
        let mut order: Vec<&Series<S>> = vec![self.target_series()];
        order.extend(self.columns.iter().filter(|c| c.name != self.target));
        let rows = (0..self.n_rows.min(n))
            .map(|r| order.iter().map(|c| c.cells[r].to_json()).collect())
            .collect();
        Preview {
            columns: order
                .iter()
                .map(|c| PreviewColumn {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
            rows,
            total_rows: self.n_rows,
            target: self.target.clone(),
        }
    }

    /// Loads a header-first CSV. Columns whose every cell is a finite number,
    /// empty, or `NaN` are numeric; all others are categorical.
    pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Table<S>, TableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_csv_str(&text, target).map_err(|e| match e {
            TableError::Csv { message, .. } => TableError::Csv {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn from_csv_str(text: &str, target: &str) -> Result<Table<S>, TableError> {
        let csv_err = |message: String| TableError::Csv {
            path: "<memory>".into(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| csv_err(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if !headers.iter().any(|h| h == target) {
            return Err(TableError::MissingTarget(target.to_string()));
        }
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record.map_err(|e| csv_err(e.to_string()))?;
            for (j, field) in record.iter().enumerate() {
                raw[j].push(field.to_string());
            }
        }
        let is_missing = |s: &str| s.is_empty() || s == "NaN";
        let parse = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
        let columns = headers
            .into_iter()
            .zip(raw)
            .map(|(name, cells)| {
                let numeric = cells.iter().all(|s| is_missing(s) || parse(s).is_some());
                let (kind, cells) = if numeric {
                    let cells = cells
                        .iter()
                        .map(|s| {
                            if is_missing(s) {
                                Cell::Missing
                            } else {
                                Cell::Num(S::lit(parse(s).unwrap()))
                            }
                        })
                        .collect();
                    (ColumnKind::Numeric, cells)
                } else {
                    let cells = cells
                        .into_iter()
                        .map(|s| {
                            if is_missing(&s) {
                                Cell::Missing
                            } else {
                                Cell::Cat(s)
                            }
                        })
                        .collect();
                    (ColumnKind::Categorical, cells)
                };
                Series { name, kind, cells }
            })
            .collect();
        Table::new(columns, target)
    }
}

/// JSON-ready slice of a table for the Before/After panes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub columns: Vec<PreviewColumn>,
    pub rows: Vec<Vec<serde_json::Value>>,
    pub total_rows: usize,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewColumn {
    pub name: String,
    pub kind: ColumnKind,
}

impl Preview {
    pub fn missing_cells(&self) -> usize {
        self.rows.iter().flatten().filter(|v| v.is_null()).count()
    }

    /// Feature columns shown (everything but the target).
    pub fn feature_count(&self) -> usize {
        self.columns.len().saturating_sub(1)
    }
}

impl fmt::Display for Preview {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(f, "{}", header.join("\t"))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    serde_json::Value::Null => "NaN".to_string(),
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n
                        .as_f64()
                        .map_or_else(|| n.to_string(), |x| format!("{x:.4}")),
                    other => other.to_string(),
                })
                .collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// Train and test tables sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    pub name: String,
    pub train: Table<S>,
    pub test: Table<S>,
}

#[derive(Deserialize)]
struct DatasetMeta {
    target: String,
}

impl<S: Scalar> Dataset<S> {
    /// Pairs two tables. A column categorical in either split becomes
    /// categorical in both.
    pub fn new(
        name: impl Into<String>,
        train: Table<S>,
        test: Table<S>,
    ) -> Result<Self, TableError> {
        if train.target != test.target {
            return Err(TableError::SchemaMismatch(format!(
                "target '{}' vs '{}'",
                train.target, test.target
            )));
        }
        let names = |t: &Table<S>| t.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>();
        if names(&train) != names(&test) {
            return Err(TableError::SchemaMismatch(format!(
                "columns {:?} vs {:?}",
                names(&train),
                names(&test)
            )));
        }
        let (mut train, mut test) = (train, test);
        for j in 0..train.columns.len() {
            if train.columns[j].kind != test.columns[j].kind {
                train.columns[j] = train.columns[j].as_categorical();
                test.columns[j] = test.columns[j].as_categorical();
            }
        }
        Ok(Dataset {
            name: name.into(),
            train,
            test,
        })
    }

    /// Loads `<name>.train.csv`, `<name>.test.csv` and `<name>.meta.json`
    /// from `dir`.
    pub fn load(dir: impl AsRef<Path>, name: &str) -> Result<Self, TableError> {
        let dir = dir.as_ref();
        let meta_path = dir.join(format!("{name}.meta.json"));
        let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| TableError::Io {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text).map_err(|e| TableError::Io {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        let train = Table::load_csv(dir.join(format!("{name}.train.csv")), &meta.target)?;
        let test = Table::load_csv(dir.join(format!("{name}.test.csv")), &meta.target)?;
        Dataset::new(name, train, test)
    }
}
