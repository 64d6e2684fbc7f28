//! Tabular datasets and pipeline execution.

pub mod fixtures;
pub mod linalg;
pub mod params;
pub mod predictor;
pub mod run;
pub mod table;
pub mod transform;
pub mod tree;

pub use fixtures::{builtin_dataset, builtin_names};
pub use params::{Params, StepError};
pub use predictor::{FittedPredictor, Model};
pub use run::{fit_pipeline, run_pipeline, FittedPipeline, FittedStep, RunResult, PREVIEW_ROWS};
pub use table::{
    Cell, ColumnKind, Dataset, Frame, Preview, PreviewColumn, Series, Table, TableError,
};
pub use transform::{FittedTransform, TransformState};

use crate::dsl::Invocation;
use crate::registry::{OperatorKind, Registry};
use crate::scalar::Scalar;

fn resolve(
    invocation: &Invocation,
    registry: &Registry,
    kind: OperatorKind,
) -> Result<Params, StepError> {
    let spec = registry.lookup(&invocation.operator).ok_or_else(|| {
        StepError::new(
            crate::DiagnosticCode::UnknownOperator,
            format!("unknown operator '{}'", invocation.operator),
        )
    })?;
    if spec.kind != kind {
        return Err(StepError::new(
            crate::DiagnosticCode::InvalidArgument,
            format!("{} is not a {kind:?}", spec.name).to_lowercase(),
        ));
    }
    Params::resolve(invocation, spec)
}

/// Fits a transformer invocation on `frame` and returns its state and output.
pub fn fit_transform_step<S: Scalar>(
    invocation: &Invocation,
    registry: &Registry,
    frame: &Frame<S>,
) -> Result<(FittedTransform<S>, Frame<S>), StepError> {
    let params = resolve(invocation, registry, OperatorKind::Transformer)?;
    transform::fit_transform(&params, frame)
}

/// Applies learned transformer state without refitting.
pub fn apply_transform_step<S: Scalar>(
    fitted: &FittedTransform<S>,
    frame: &Frame<S>,
) -> Result<Frame<S>, StepError> {
    transform::apply(fitted, frame)
}

/// Fits a predictor invocation on `features` against `target`.
pub fn fit_predictor_step<S: Scalar>(
    invocation: &Invocation,
    registry: &Registry,
    features: &Frame<S>,
    target: &Series<S>,
    seed: u64,
) -> Result<FittedPredictor<S>, StepError> {
    let params = resolve(invocation, registry, OperatorKind::Predictor)?;
    predictor::fit_predictor(&params, features, target, seed)
}

/// Accuracy of `fitted` on `features` against `target`.
pub fn score<S: Scalar>(
    fitted: &FittedPredictor<S>,
    features: &Frame<S>,
    target: &Series<S>,
) -> Result<f64, StepError> {
    fitted.score(features, target)
}
