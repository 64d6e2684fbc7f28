//! Fit/apply semantics of the data-transforming operators.

use super::linalg;
use super::params::{Params, StepError};
use super::table::{Cell, ColumnKind, Frame, Series};
use crate::diagnostic::DiagnosticCode;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Max,
}

/// Learned state of one transformer step.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformState<S> {
    Imputer {
        fills: Vec<Cell<S>>,
    },
    Scaler {
        offsets: Vec<S>,
        scales: Vec<S>,
    },
    MinMax {
        mins: Vec<S>,
        ranges: Vec<S>,
        clip: bool,
    },
    Normalizer {
        norm: Norm,
    },
    OneHot {
        vocab: Vec<Option<Vec<String>>>,
        ignore_unknown: bool,
    },
    Ordinal {
        vocab: Vec<Option<Vec<String>>>,
    },
    Pca {
        means: Vec<S>,
        components: Vec<Vec<S>>,
        variances: Vec<S>,
        whiten: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform<S> {
    pub operator: String,
    /// Column names and kinds the step was fitted on.
    pub input: Vec<(String, ColumnKind)>,
    pub state: TransformState<S>,
}

fn require_numeric<S: Scalar>(op: &str, frame: &Frame<S>) -> Result<(), StepError> {
    if let Some(c) = frame
        .columns
        .iter()
        .find(|c| c.kind == ColumnKind::Categorical)
    {
        return Err(StepError::new(
            DiagnosticCode::CategoricalInput,
            format!(
                "{op} requires numeric features, but column '{}' is categorical",
                c.name
            ),
        ));
    }
    require_complete(op, frame.columns.iter())
}

fn require_complete<'a, S: Scalar + 'a>(
    op: &str,
    mut columns: impl Iterator<Item = &'a Series<S>>,
) -> Result<(), StepError> {
    if let Some(c) = columns.find(|c| c.missing_count() > 0) {
        return Err(StepError::new(
            DiagnosticCode::MissingValues,
            format!("missing values reach {op} (column '{}')", c.name),
        ));
    }
    Ok(())
}

/// First-appearance vocabulary of a categorical column.
fn vocabulary<S: Scalar>(col: &Series<S>) -> Vec<String> {
    let mut vocab: Vec<String> = Vec::new();
    for cell in &col.cells {
        if let Cell::Cat(s) = cell {
            if !vocab.contains(s) {
                vocab.push(s.clone());
            }
        }
    }
    vocab
}

fn most_frequent<S: Scalar>(col: &Series<S>) -> Cell<S> {
    let mut seen: Vec<(Cell<S>, usize)> = Vec::new();
    for cell in col.cells.iter().filter(|c| !c.is_missing()) {
        match seen.iter_mut().find(|(c, _)| c == cell) {
            Some((_, n)) => *n += 1,
            None => seen.push((cell.clone(), 1)),
        }
    }
    // first appearance wins ties
    let mut best: Option<(Cell<S>, usize)> = None;
    for (cell, n) in seen {
        if best.as_ref().is_none_or(|(_, b)| n > *b) {
            best = Some((cell, n));
        }
    }
    best.map_or(Cell::Missing, |(c, _)| c)
}

pub fn fit<S: Scalar>(params: &Params, frame: &Frame<S>) -> Result<FittedTransform<S>, StepError> {
    let op = params.operator();
    let state = match op {
        "SimpleImputer" => {
            let strategy = params.choice("strategy").unwrap_or("mean");
            let fills = frame
                .columns
                .iter()
                .map(|c| match (strategy, c.kind) {
                    ("most_frequent", _) => Ok(most_frequent(c)),
                    ("constant", ColumnKind::Numeric) => {
                        Ok(Cell::Num(S::lit(params.real("fill_value").unwrap_or(0.0))))
                    }
                    ("constant", ColumnKind::Categorical) => Ok(Cell::Cat("missing_value".into())),
                    (_, ColumnKind::Categorical) => Err(StepError::new(
                        DiagnosticCode::CategoricalInput,
                        format!(
                            "SimpleImputer(strategy='{strategy}') cannot fill categorical column '{}'",
                            c.name
                        ),
                    )),
                    ("median", ColumnKind::Numeric) => Ok(Cell::Num(linalg::median(&c.present_values()))),
                    (_, ColumnKind::Numeric) => Ok(Cell::Num(linalg::mean(&c.present_values()))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            TransformState::Imputer { fills }
        }
        "StandardScaler" => {
            require_numeric(op, frame)?;
            let with_mean = params.flag("with_mean", true);
            let with_std = params.flag("with_std", true);
            let (mut offsets, mut scales) = (Vec::new(), Vec::new());
            for c in &frame.columns {
                let xs = c.present_values();
                offsets.push(if with_mean {
                    linalg::mean(&xs)
                } else {
                    S::zero()
                });
                let sd = linalg::population_std(&xs);
                scales.push(if with_std && sd > S::zero() {
                    sd
                } else {
                    S::one()
                });
            }
            TransformState::Scaler { offsets, scales }
        }
        "MinMaxScaler" => {
            require_numeric(op, frame)?;
            let (mut mins, mut ranges) = (Vec::new(), Vec::new());
            for c in &frame.columns {
                let xs = c.present_values();
                let lo = xs.iter().copied().fold(S::infinity(), S::min);
                let hi = xs.iter().copied().fold(S::neg_infinity(), S::max);
                let (lo, range) = if xs.is_empty() {
                    (S::zero(), S::one())
                } else {
                    (lo, hi - lo)
                };
                mins.push(lo);
                ranges.push(if range > S::zero() { range } else { S::one() });
            }
            TransformState::MinMax {
                mins,
                ranges,
                clip: params.flag("clip", false),
            }
        }
        "Normalizer" => {
            require_numeric(op, frame)?;
            let norm = match params.choice("norm").unwrap_or("l2") {
                "l1" => Norm::L1,
                "max" => Norm::Max,
                _ => Norm::L2,
            };
            TransformState::Normalizer { norm }
        }
        "OneHotEncoder" | "OrdinalEncoder" => {
            require_complete(
                op,
                frame
                    .columns
                    .iter()
                    .filter(|c| c.kind == ColumnKind::Categorical),
            )?;
            let vocab = frame
                .columns
                .iter()
                .map(|c| (c.kind == ColumnKind::Categorical).then(|| vocabulary(c)))
                .collect();
            if op == "OneHotEncoder" {
                TransformState::OneHot {
                    vocab,
                    ignore_unknown: params.choice("handle_unknown") != Some("error"),
                }
            } else {
                TransformState::Ordinal { vocab }
            }
        }
        "PCA" => {
            require_numeric(op, frame)?;
            if frame.n_rows == 0 {
                return Err(StepError::new(
                    DiagnosticCode::EmptyData,
                    "PCA needs at least one row",
                ));
            }
            let d = frame.width();
            let k = params.int("n_components").map_or(d, |k| k as usize);
            if k > d {
                return Err(StepError::new(
                    DiagnosticCode::InvalidArgument,
                    format!("n_components={k} exceeds the number of features ({d})"),
                ));
            }
            let rows = frame.numeric_rows().expect("checked numeric and complete");
            let (cov, means) = linalg::covariance(&rows);
            let (values, vectors) = linalg::symmetric_eigen(&cov);
            TransformState::Pca {
                means,
                components: vectors.into_iter().take(k).collect(),
                variances: values
                    .into_iter()
                    .take(k)
                    .map(|v| v.max(S::zero()))
                    .collect(),
                whiten: params.flag("whiten", false),
            }
        }
        other => {
            return Err(StepError::new(
                DiagnosticCode::NotExecutable,
                format!("'{other}' cannot be executed by this engine"),
            ))
        }
    };
    Ok(FittedTransform {
        operator: op.to_string(),
        input: frame.schema(),
        state,
    })
}

/// Applies learned state without refitting.
pub fn apply<S: Scalar>(
    fitted: &FittedTransform<S>,
    frame: &Frame<S>,
) -> Result<Frame<S>, StepError> {
    let op = fitted.operator.as_str();
    if frame.schema() != fitted.input {
        return Err(StepError::new(
            DiagnosticCode::SchemaMismatch,
            format!("{op} was fitted on a different column schema"),
        ));
    }
    let n = frame.n_rows;
    let map_numeric = |f: &dyn Fn(usize, S) -> S| -> Result<Frame<S>, StepError> {
        require_numeric(op, frame)?;
        let columns = frame
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| Series {
                name: c.name.clone(),
                kind: ColumnKind::Numeric,
                cells: c
                    .cells
                    .iter()
                    .map(|x| Cell::Num(f(j, x.num().expect("numeric"))))
                    .collect(),
            })
            .collect();
        Ok(Frame { columns, n_rows: n })
    };
    match &fitted.state {
        TransformState::Imputer { fills } => {
            let columns = frame
                .columns
                .iter()
                .zip(fills)
                .map(|(c, fill)| Series {
                    name: c.name.clone(),
                    kind: c.kind,
                    cells: c
                        .cells
                        .iter()
                        .map(|x| {
                            if x.is_missing() {
                                fill.clone()
                            } else {
                                x.clone()
                            }
                        })
                        .collect(),
                })
                .collect();
            Ok(Frame { columns, n_rows: n })
        }
        TransformState::Scaler { offsets, scales } => {
            map_numeric(&|j, x| (x - offsets[j]) / scales[j])
        }
        TransformState::MinMax { mins, ranges, clip } => map_numeric(&|j, x| {
            let y = (x - mins[j]) / ranges[j];
            if *clip {
                y.max(S::zero()).min(S::one())
            } else {
                y
            }
        }),
        TransformState::Normalizer { norm } => {
            require_numeric(op, frame)?;
            let mut rows = frame.numeric_rows().expect("numeric");
            for row in rows.iter_mut() {
                let size = match norm {
                    Norm::L2 => row.iter().map(|&x| x * x).sum::<S>().sqrt(),
                    Norm::L1 => row.iter().map(|x| x.abs()).sum::<S>(),
                    Norm::Max => row.iter().fold(S::zero(), |m, x| m.max(x.abs())),
                };
                if size > S::zero() {
                    row.iter_mut().for_each(|x| *x = *x / size);
                }
            }
            Ok(Frame::from_numeric_rows(
                frame.columns.iter().map(|c| c.name.clone()).collect(),
                &rows,
            ))
        }
        TransformState::OneHot {
            vocab,
            ignore_unknown,
        } => {
            let mut columns = Vec::new();
            for (c, vocab) in frame.columns.iter().zip(vocab) {
                let Some(vocab) = vocab else {
                    columns.push(c.clone());
                    continue;
                };
                require_complete(op, std::iter::once(c))?;
                if !ignore_unknown {
                    if let Some(Cell::Cat(s)) = c
                        .cells
                        .iter()
                        .find(|x| matches!(x, Cell::Cat(s) if !vocab.contains(s)))
                    {
                        return Err(StepError::new(
                            DiagnosticCode::UnknownCategory,
                            format!(
                                "category '{s}' in column '{}' was not seen during fit",
                                c.name
                            ),
                        ));
                    }
                }
                for category in vocab {
                    columns.push(Series {
                        name: format!("{}={category}", c.name),
                        kind: ColumnKind::Numeric,
                        cells: c
                            .cells
                            .iter()
                            .map(|x| match x {
                                Cell::Cat(s) if s == category => Cell::Num(S::one()),
                                _ => Cell::Num(S::zero()),
                            })
                            .collect(),
                    });
                }
            }
            Ok(Frame { columns, n_rows: n })
        }
        TransformState::Ordinal { vocab } => {
            let mut columns = Vec::new();
            for (c, vocab) in frame.columns.iter().zip(vocab) {
                let Some(vocab) = vocab else {
                    columns.push(c.clone());
                    continue;
                };
                require_complete(op, std::iter::once(c))?;
                let cells = c
                    .cells
                    .iter()
                    .map(|x| match x {
                        Cell::Cat(s) => vocab
                            .iter()
                            .position(|v| v == s)
                            .map(|i| Cell::Num(S::of_usize(i)))
                            .ok_or_else(|| {
                                StepError::new(
                                    DiagnosticCode::UnknownCategory,
                                    format!(
                                        "category '{s}' in column '{}' was not seen during fit",
                                        c.name
                                    ),
                                )
                            }),
                        other => Ok(other.clone()),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                columns.push(Series {
                    name: c.name.clone(),
                    kind: ColumnKind::Numeric,
                    cells,
                });
            }
            Ok(Frame { columns, n_rows: n })
        }
        TransformState::Pca {
            means,
            components,
            variances,
            whiten,
        } => {
            require_numeric(op, frame)?;
            let rows = frame.numeric_rows().expect("numeric");
            let projected: Vec<Vec<S>> = rows
                .iter()
                .map(|r| {
                    let centered: Vec<S> = r.iter().zip(means).map(|(&x, &m)| x - m).collect();
                    components
                        .iter()
                        .zip(variances)
                        .map(|(v, &var)| {
                            let p = linalg::dot(&centered, v);
                            if *whiten && var > S::epsilon() {
                                p / var.sqrt()
                            } else {
                                p
                            }
                        })
                        .collect()
                })
                .collect();
            let names = (1..=components.len()).map(|i| format!("pc{i}")).collect();
            Ok(Frame::from_numeric_rows(names, &projected))
        }
    }
}

/// Fits a transformer on `frame` and returns it with the transformed frame.
pub fn fit_transform<S: Scalar>(
    params: &Params,
    frame: &Frame<S>,
) -> Result<(FittedTransform<S>, Frame<S>), StepError> {
    let fitted = fit(params, frame)?;
    let out = apply(&fitted, frame)?;
    Ok((fitted, out))
}
