use super::ast::{ArgKey, PipelineAst};
use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::dsl::ArgValue;
use crate::registry::{OperatorKind, Registry};

/// Checks a pipeline against the registry. Diagnostics are ordered by step,
/// then by argument.
pub fn validate_pipeline(ast: &PipelineAst, registry: &Registry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let last = ast.steps.len().saturating_sub(1);
    for (i, step) in ast.steps.iter().enumerate() {
        let Some(spec) = registry.lookup(&step.operator) else {
            out.push(
                Diagnostic::error(
                    DiagnosticCode::UnknownOperator,
                    format!("unknown operator '{}'", step.operator),
                )
                .at_step(i),
            );
            continue;
        };
        match spec.kind {
            OperatorKind::Predictor if i != last => out.push(
                Diagnostic::error(
                    DiagnosticCode::PredictorPosition,
                    format!(
                        "predictor '{}' must be the final step of the pipeline",
                        step.operator
                    ),
                )
                .at_step(i),
            ),
            OperatorKind::Utility => out.push(
                Diagnostic::error(
                    DiagnosticCode::NotAnOperator,
                    format!(
                        "'{}' is a utility function, not a pipeline operator",
                        step.operator
                    ),
                )
                .at_step(i),
            ),
            _ => {}
        }
        if !spec.executable {
            out.push(
                Diagnostic::warning(
                    DiagnosticCode::NotExecutable,
                    format!("'{}' cannot be executed by this engine", step.operator),
                )
                .at_step(i),
            );
        }
        for arg in &step.args {
            let name = match &arg.key {
                ArgKey::Named(n) => n.as_str(),
                ArgKey::Positional(_) => {
                    out.push(
                        Diagnostic::error(
                            DiagnosticCode::UnknownParameter,
                            format!("positional argument '{}' is not allowed", arg.key),
                        )
                        .at_step(i)
                        .with_param(arg.key.to_string()),
                    );
                    continue;
                }
            };
            let Some(hp) = spec.hyperparam(name) else {
                out.push(
                    Diagnostic::error(
                        DiagnosticCode::UnknownParameter,
                        format!("'{}' has no hyper-parameter '{name}'", step.operator),
                    )
                    .at_step(i)
                    .with_param(name),
                );
                continue;
            };
            if let ArgValue::Mask = arg.value {
                out.push(
                    Diagnostic::error(
                        DiagnosticCode::UnresolvedPlaceholder,
                        format!("'{name}' is an unresolved placeholder (MASK)"),
                    )
                    .at_step(i)
                    .with_param(name),
                );
            } else if let Err(v) = hp.validate(&arg.value) {
                out.push(
                    Diagnostic::error(DiagnosticCode::SchemaViolation, v.to_string())
                        .at_step(i)
                        .with_param(name),
                );
            }
        }
    }
    out
}
