use serde::{Deserialize, Serialize};

use super::params::{Params, StepError};
use super::predictor::{fit_predictor, FittedPredictor};
use super::table::{Dataset, Frame, Preview, Table};
use super::transform::{self, FittedTransform};
use crate::diagnostic::{has_errors, Diagnostic, DiagnosticCode};
use crate::dsl::{validate_pipeline, PipelineAst};
use crate::registry::{OperatorKind, Registry};
use crate::scalar::Scalar;

/// Rows shown in the Before/After previews.
pub const PREVIEW_ROWS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum FittedStep<S> {
    Transform(FittedTransform<S>),
    Predict(FittedPredictor<S>),
}

/// Learned state of every step, in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FittedPipeline<S> {
    pub steps: Vec<FittedStep<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub before: Preview,
    /// Transformed train features; absent when the run stopped early.
    pub after: Option<Preview>,
    pub score: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Fitted<S> {
    pipeline: FittedPipeline<S>,
    train: Frame<S>,
    score: Option<f64>,
}

/// Fits every step on train and applies transforms to test, stopping at
/// the first failing step. On failure the train features reached so far
/// are returned alongside the error when the transforms all succeeded.
fn fit_steps<S: Scalar>(
    dataset: &Dataset<S>,
    ast: &PipelineAst,
    registry: &Registry,
    seed: u64,
) -> Result<Fitted<S>, (Option<Frame<S>>, Diagnostic)> {
    let mut train = dataset.train.features();
    let mut test = dataset.test.features();
    let mut pipeline = FittedPipeline::default();
    let mut score = None;
    for (i, inv) in ast.steps.iter().enumerate() {
        let spec = registry.lookup(&inv.operator).ok_or_else(|| {
            let e = StepError::new(
                DiagnosticCode::UnknownOperator,
                format!("unknown operator '{}'", inv.operator),
            );
            (None, e.into_diagnostic(i))
        })?;
        let params = Params::resolve(inv, spec).map_err(|e| (None, e.into_diagnostic(i)))?;
        match spec.kind {
            OperatorKind::Transformer => {
                let (fitted, out) = transform::fit_transform(&params, &train)
                    .map_err(|e| (None, e.into_diagnostic(i)))?;
                test =
                    transform::apply(&fitted, &test).map_err(|e| (None, e.into_diagnostic(i)))?;
                train = out;
                pipeline.steps.push(FittedStep::Transform(fitted));
            }
            OperatorKind::Predictor => {
                let fail =
                    |e: StepError, train: &Frame<S>| (Some(train.clone()), e.into_diagnostic(i));
                let fitted = fit_predictor(&params, &train, dataset.train.target_series(), seed)
                    .map_err(|e| fail(e, &train))?;
                score = Some(
                    fitted
                        .score(&test, dataset.test.target_series())
                        .map_err(|e| fail(e, &train))?,
                );
                pipeline.steps.push(FittedStep::Predict(fitted));
            }
            OperatorKind::Utility => {
                let e = StepError::new(
                    DiagnosticCode::NotAnOperator,
                    format!("'{}' is not a pipeline operator", inv.operator),
                );
                return Err((None, e.into_diagnostic(i)));
            }
        }
    }
    Ok(Fitted {
        pipeline,
        train,
        score,
    })
}

/// Fits the pipeline on the dataset's train split.
pub fn fit_pipeline<S: Scalar>(
    dataset: &Dataset<S>,
    ast: &PipelineAst,
    registry: &Registry,
    seed: u64,
) -> Result<FittedPipeline<S>, Vec<Diagnostic>> {
    let diagnostics = validate_pipeline(ast, registry);
    if has_errors(&diagnostics) {
        return Err(diagnostics);
    }
    fit_steps(dataset, ast, registry, seed)
        .map(|f| f.pipeline)
        .map_err(|(_, d)| vec![d])
}

fn after_preview<S: Scalar>(train: &Table<S>, features: Frame<S>) -> Preview {
    train.with_features(features).preview(PREVIEW_ROWS)
}

/// Validates and executes `ast`: fits on train, previews the transformed
/// train features and scores the final predictor on test. Operator
/// failures become diagnostics.
pub fn run_pipeline<S: Scalar>(
    dataset: &Dataset<S>,
    ast: &PipelineAst,
    registry: &Registry,
    seed: u64,
) -> RunResult {
    let before = dataset.train.preview(PREVIEW_ROWS);
    let mut diagnostics = validate_pipeline(ast, registry);
    if has_errors(&diagnostics) {
        return RunResult {
            before,
            after: None,
            score: None,
            diagnostics,
        };
    }
    match fit_steps(dataset, ast, registry, seed) {
        Ok(fitted) => RunResult {
            before,
            after: Some(after_preview(&dataset.train, fitted.train)),
            score: fitted.score,
            diagnostics,
        },
        Err((train, diag)) => {
            log::debug!("pipeline run stopped: {diag}");
            diagnostics.push(diag);
            RunResult {
                before,
                after: train.map(|t| after_preview(&dataset.train, t)),
                score: None,
                diagnostics,
            }
        }
    }
}
