use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::dsl::{ArgKey, ArgValue, Invocation};
use crate::registry::OperatorSpec;

/// Operator-level failure raised while fitting or applying a step.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct StepError {
    pub code: DiagnosticCode,
    pub message: String,
}

impl StepError {
    pub fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        StepError {
            code,
            message: message.into(),
        }
    }

    pub fn into_diagnostic(self, step: usize) -> Diagnostic {
        Diagnostic::error(self.code, self.message).at_step(step)
    }
}

/// Hyper-parameter values of one invocation, with schema defaults filled in.
#[derive(Debug, Clone)]
pub struct Params {
    operator: String,
    values: Vec<(String, ArgValue)>,
}

impl Params {
    /// Resolves every hyper-parameter of `spec`, validating supplied values.
    pub fn resolve(inv: &Invocation, spec: &OperatorSpec) -> Result<Params, StepError> {
        for arg in &inv.args {
            let ArgKey::Named(name) = &arg.key else {
                return Err(StepError::new(
                    DiagnosticCode::UnknownParameter,
                    format!("positional argument '{}' is not allowed", arg.key),
                ));
            };
            let Some(hp) = spec.hyperparam(name) else {
                return Err(StepError::new(
                    DiagnosticCode::UnknownParameter,
                    format!("'{}' has no hyper-parameter '{name}'", spec.name),
                ));
            };
            if arg.value.is_mask() {
                return Err(StepError::new(
                    DiagnosticCode::UnresolvedPlaceholder,
                    format!("'{name}' is an unresolved placeholder (MASK)"),
                ));
            }
            hp.validate(&arg.value)
                .map_err(|v| StepError::new(DiagnosticCode::SchemaViolation, v.to_string()))?;
        }
        let values = spec
            .hyperparams
            .iter()
            .map(|hp| {
                let v = inv
                    .get(&hp.name)
                    .cloned()
                    .unwrap_or_else(|| hp.default.clone());
                (hp.name.clone(), v)
            })
            .collect();
        Ok(Params {
            operator: spec.name.clone(),
            values,
        })
    }

    pub fn operator(&self) -> &str {
        &self.operator
    }

    fn get(&self, name: &str) -> &ArgValue {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .unwrap_or(&ArgValue::None)
    }

    /// Integer value, `None` when the parameter is null.
    pub fn int(&self, name: &str) -> Option<i64> {
        match self.get(name) {
            ArgValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(name).as_f64()
    }

    pub fn flag(&self, name: &str, default: bool) -> bool {
        match self.get(name) {
            ArgValue::Bool(b) => *b,
            _ => default,
        }
    }

    pub fn choice(&self, name: &str) -> Option<&str> {
        self.get(name).as_str()
    }

    /// Seed for randomized operators: `random_state` when set, else `fallback`.
    pub fn seed(&self, fallback: u64) -> u64 {
        self.int("random_state").map_or(fallback, |s| s as u64)
    }
}
