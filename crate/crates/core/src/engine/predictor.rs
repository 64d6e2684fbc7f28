//! Fit/predict semantics of the classifier operators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Params, StepError};
use super::table::{ColumnKind, Frame, Series};
use super::tree::{self, ClassWeight, Criterion, ForestConfig, Tree, TreeConfig};
use crate::diagnostic::DiagnosticCode;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<S> {
    Dummy {
        majority: usize,
    },
    Tree(Tree<S>),
    Forest(Vec<Tree<S>>),
    Knn {
        k: usize,
        weights: KnnWeights,
        x: Vec<Vec<S>>,
        y: Vec<usize>,
    },
    GaussianNb {
        log_priors: Vec<S>,
        means: Vec<Vec<S>>,
        vars: Vec<Vec<S>>,
    },
    Logistic {
        weights: Vec<Vec<S>>,
        bias: Vec<S>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPredictor<S> {
    pub operator: String,
    pub input: Vec<(String, ColumnKind)>,
    /// Class labels in first-appearance order of the training target.
    pub classes: Vec<String>,
    pub model: Model<S>,
}

fn numeric_matrix<S: Scalar>(op: &str, frame: &Frame<S>) -> Result<Vec<Vec<S>>, StepError> {
    if let Some(c) = frame.columns.iter().find(|c| c.missing_count() > 0) {
        return Err(StepError::new(
            DiagnosticCode::MissingValues,
            format!("missing values reach {op} (column '{}')", c.name),
        ));
    }
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
    Ok(frame.numeric_rows().expect("complete numeric frame"))
}

/// Encodes target labels as class indices in first-appearance order.
fn encode_target<S: Scalar>(target: &Series<S>) -> Result<(Vec<String>, Vec<usize>), StepError> {
    let mut classes: Vec<String> = Vec::new();
    let mut y = Vec::with_capacity(target.cells.len());
    for cell in &target.cells {
        let Some(label) = cell.label() else {
            return Err(StepError::new(
                DiagnosticCode::MissingTarget,
                format!("target column '{}' has missing labels", target.name),
            ));
        };
        let idx = match classes.iter().position(|c| *c == label) {
            Some(i) => i,
            None => {
                classes.push(label);
                classes.len() - 1
            }
        };
        y.push(idx);
    }
    Ok((classes, y))
}

fn criterion(params: &Params) -> Criterion {
    match params.choice("criterion") {
        Some("entropy") => Criterion::Entropy,
        _ => Criterion::Gini,
    }
}

fn tree_config(params: &Params, max_features: Option<usize>) -> TreeConfig {
    TreeConfig {
        criterion: criterion(params),
        max_depth: params.int("max_depth").map(|d| d as usize),
        min_samples_split: params.int("min_samples_split").unwrap_or(2) as usize,
        min_samples_leaf: params.int("min_samples_leaf").unwrap_or(1) as usize,
        max_features,
    }
}

fn fit_logistic<S: Scalar>(
    x: &[Vec<S>],
    y: &[usize],
    n_classes: usize,
    c: S,
    max_iter: usize,
    fit_intercept: bool,
) -> (Vec<Vec<S>>, Vec<S>) {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let nf = S::of_usize(n);
    let lr = S::lit(0.1);
    let mut w = vec![vec![S::zero(); d]; n_classes];
    let mut b = vec![S::zero(); n_classes];
    for _ in 0..max_iter {
        let mut gw = vec![vec![S::zero(); d]; n_classes];
        let mut gb = vec![S::zero(); n_classes];
        for (row, &label) in x.iter().zip(y) {
            let p = softmax(&logits(&w, &b, row));
            for k in 0..n_classes {
                let err = p[k] - if k == label { S::one() } else { S::zero() };
                for j in 0..d {
                    gw[k][j] = gw[k][j] + err * row[j];
                }
                gb[k] = gb[k] + err;
            }
        }
        for k in 0..n_classes {
            for j in 0..d {
                let grad = gw[k][j] / nf + w[k][j] / (c * nf);
                w[k][j] = w[k][j] - lr * grad;
            }
            if fit_intercept {
                b[k] = b[k] - lr * gb[k] / nf;
            }
        }
    }
    (w, b)
}

pub(crate) fn logits<S: Scalar>(w: &[Vec<S>], b: &[S], row: &[S]) -> Vec<S> {
    w.iter()
        .zip(b)
        .map(|(wk, &bk)| bk + wk.iter().zip(row).map(|(&a, &x)| a * x).sum::<S>())
        .collect()
}

pub(crate) fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let m = z.iter().copied().fold(S::neg_infinity(), S::max);
    let e: Vec<S> = z.iter().map(|&v| (v - m).exp()).collect();
    let total: S = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

pub(crate) fn nb_log_posterior<S: Scalar>(
    log_priors: &[S],
    means: &[Vec<S>],
    vars: &[Vec<S>],
    row: &[S],
) -> Vec<S> {
    let two_pi = S::lit(std::f64::consts::TAU);
    let half = S::lit(0.5);
    (0..log_priors.len())
        .map(|k| {
            log_priors[k]
                + row
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let v = vars[k][j];
                        let diff = x - means[k][j];
                        -half * (two_pi * v).ln() - diff * diff / (S::lit(2.0) * v)
                    })
                    .sum::<S>()
        })
        .collect()
}

fn fit_gaussian_nb<S: Scalar>(
    x: &[Vec<S>],
    y: &[usize],
    n_classes: usize,
    var_smoothing: S,
) -> Model<S> {
    let d = x.first().map_or(0, Vec::len);
    let n = S::of_usize(x.len());
    // smoothing is relative to the largest per-feature variance
    let max_var = (0..d)
        .map(|j| {
            let col: Vec<S> = x.iter().map(|r| r[j]).collect();
            let s = super::linalg::population_std(&col);
            s * s
        })
        .fold(S::zero(), S::max);
    let epsilon = var_smoothing * max_var;
    let floor = S::lit(1e-9);
    let mut log_priors = Vec::with_capacity(n_classes);
    let mut means = Vec::with_capacity(n_classes);
    let mut vars = Vec::with_capacity(n_classes);
    for k in 0..n_classes {
        let rows: Vec<&Vec<S>> = x
            .iter()
            .zip(y)
            .filter(|(_, &c)| c == k)
            .map(|(r, _)| r)
            .collect();
        log_priors.push((S::of_usize(rows.len()) / n).ln());
        let mut mk = Vec::with_capacity(d);
        let mut vk = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<S> = rows.iter().map(|r| r[j]).collect();
            let s = super::linalg::population_std(&col);
            mk.push(super::linalg::mean(&col));
            vk.push((s * s + epsilon).max(floor));
        }
        means.push(mk);
        vars.push(vk);
    }
    Model::GaussianNb {
        log_priors,
        means,
        vars,
    }
}

fn argmax_first<S: Scalar>(xs: &[S]) -> usize {
    tree::argmax(xs)
}

/// Fits a predictor operator on `features` against `target`.
pub fn fit_predictor<S: Scalar>(
    params: &Params,
    features: &Frame<S>,
    target: &Series<S>,
    seed: u64,
) -> Result<FittedPredictor<S>, StepError> {
    let op = params.operator();
    let (classes, y) = encode_target(target)?;
    // the dummy baseline never looks at features, so any schema is fine
    let x = if op == "DummyClassifier" {
        vec![Vec::new(); features.n_rows]
    } else {
        numeric_matrix(op, features)?
    };
    if x.is_empty() {
        return Err(StepError::new(
            DiagnosticCode::EmptyData,
            format!("{op} has no training rows"),
        ));
    }
    let n_classes = classes.len();
    let model = match op {
        "DummyClassifier" => {
            let mut counts = vec![0usize; n_classes];
            for &c in &y {
                counts[c] += 1;
            }
            let mut majority = 0;
            for (i, &c) in counts.iter().enumerate() {
                if c > counts[majority] {
                    majority = i;
                }
            }
            Model::Dummy { majority }
        }
        "DecisionTreeClassifier" => {
            let w = vec![S::one(); x.len()];
            let cfg = tree_config(params, None);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed(seed));
            Model::Tree(Tree::fit(
                &x,
                &y,
                &w,
                (0..x.len()).collect(),
                n_classes,
                &cfg,
                Some(&mut rng),
            ))
        }
        "RandomForestClassifier" => {
            let d = features.width();
            let max_features = match params.choice("max_features") {
                Some("sqrt") => Some(((d as f64).sqrt().floor() as usize).max(1)),
                Some("log2") => Some((((d as f64).log2().floor()) as usize).max(1)),
                _ => None,
            };
            let class_weight = match params.choice("class_weight") {
                Some("balanced") => ClassWeight::Balanced,
                Some("balanced_subsample") => ClassWeight::BalancedSubsample,
                _ => ClassWeight::Uniform,
            };
            let cfg = ForestConfig {
                n_estimators: params.int("n_estimators").unwrap_or(100) as usize,
                bootstrap: params.flag("bootstrap", true),
                class_weight,
                tree: tree_config(params, max_features),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed(seed));
            Model::Forest(tree::fit_forest(&x, &y, n_classes, &cfg, &mut rng))
        }
        "KNeighborsClassifier" => {
            let k = params.int("n_neighbors").unwrap_or(5) as usize;
            if k > x.len() {
                return Err(StepError::new(
                    DiagnosticCode::InvalidArgument,
                    format!("n_neighbors={k} exceeds the {} training rows", x.len()),
                ));
            }
            let weights = match params.choice("weights") {
                Some("distance") => KnnWeights::Distance,
                _ => KnnWeights::Uniform,
            };
            Model::Knn { k, weights, x, y }
        }
        "GaussianNB" => {
            let vs = S::lit(params.real("var_smoothing").unwrap_or(1e-9));
            fit_gaussian_nb(&x, &y, n_classes, vs)
        }
        "LogisticRegression" => {
            let c = S::lit(params.real("C").unwrap_or(1.0));
            let iters = params.int("max_iter").unwrap_or(500) as usize;
            let (weights, bias) = fit_logistic(
                &x,
                &y,
                n_classes,
                c,
                iters,
                params.flag("fit_intercept", true),
            );
            Model::Logistic { weights, bias }
        }
        other => {
            return Err(StepError::new(
                DiagnosticCode::NotExecutable,
                format!("{other} is not executable by the engine"),
            ))
        }
    };
    Ok(FittedPredictor {
        operator: op.to_string(),
        input: features.schema(),
        classes,
        model,
    })
}

impl<S: Scalar> FittedPredictor<S> {
    fn predict_index(&self, row: &[S]) -> usize {
        match &self.model {
            Model::Dummy { majority } => *majority,
            Model::Tree(t) => t.predict_row(row),
            Model::Forest(trees) => tree::vote(trees, row, self.classes.len()),
            Model::Knn { k, weights, x, y } => {
                let mut dist: Vec<(S, usize)> = x
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let d2: S = r.iter().zip(row).map(|(&a, &b)| (a - b) * (a - b)).sum();
                        (d2.sqrt(), i)
                    })
                    .collect();
                dist.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .expect("finite distances")
                        .then(a.1.cmp(&b.1))
                });
                let nearest = &dist[..*k];
                let mut votes = vec![S::zero(); self.classes.len()];
                let exact = nearest.iter().any(|(d, _)| *d == S::zero());
                for &(d, i) in nearest {
                    let w = match weights {
                        KnnWeights::Uniform => S::one(),
                        // exact matches take all the weight
                        KnnWeights::Distance if exact => {
                            if d == S::zero() {
                                S::one()
                            } else {
                                S::zero()
                            }
                        }
                        KnnWeights::Distance => S::one() / d,
                    };
                    votes[y[i]] = votes[y[i]] + w;
                }
                argmax_first(&votes)
            }
            Model::GaussianNb {
                log_priors,
                means,
                vars,
            } => argmax_first(&nb_log_posterior(log_priors, means, vars, row)),
            Model::Logistic { weights, bias } => argmax_first(&logits(weights, bias, row)),
        }
    }

    fn check_schema(&self, features: &Frame<S>) -> Result<Vec<Vec<S>>, StepError> {
        if features.schema() != self.input {
            return Err(StepError::new(
                DiagnosticCode::SchemaMismatch,
                format!("{} was fitted on a different feature schema", self.operator),
            ));
        }
        if let Model::Dummy { .. } = self.model {
            return Ok(vec![Vec::new(); features.n_rows]);
        }
        numeric_matrix(&self.operator, features)
    }

    /// Predicted class labels for every row of `features`.
    pub fn predict(&self, features: &Frame<S>) -> Result<Vec<String>, StepError> {
        let x = self.check_schema(features)?;
        Ok(x.iter()
            .map(|r| self.classes[self.predict_index(r)].clone())
            .collect())
    }

    /// Fraction of rows whose predicted label equals the target label.
    pub fn score(&self, features: &Frame<S>, target: &Series<S>) -> Result<f64, StepError> {
        if features.n_rows == 0 {
            return Err(StepError::new(
                DiagnosticCode::EmptyData,
                "empty evaluation set",
            ));
        }
        let predicted = self.predict(features)?;
        let hits = predicted
            .iter()
            .zip(&target.cells)
            .filter(|(p, cell)| cell.label().as_deref() == Some(p.as_str()))
            .count();
        Ok(hits as f64 / features.n_rows as f64)
    }
}
