//! Operator specifications loaded from a JSON manifest.
//!
//! Each operator carries its hyper-parameters described with a small subset of
//! JSON schema: integer, real, boolean and string-enum kinds, optionally
//! nullable, with inclusive numeric bounds.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::ArgValue;

const BUILTIN_MANIFEST: &str = include_str!("../data/manifest.json");

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("operators[{index}]: duplicate operator name '{name}'")]
    DuplicateOperator { index: usize, name: String },
    #[error("operators[{index}] ({operator}): {message}")]
    InvalidEntry {
        index: usize,
        operator: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Transformer,
    Predictor,
    Utility,
}

/// Palette color role of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorRole {
    Red,
    Purple,
    Gray,
}

impl OperatorKind {
    pub fn color(self) -> ColorRole {
        match self {
            OperatorKind::Transformer => ColorRole::Red,
            OperatorKind::Predictor => ColorRole::Purple,
            OperatorKind::Utility => ColorRole::Gray,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Integer,
    #[serde(rename = "number")]
    Real,
    Boolean,
    Enum,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Integer => "integer",
            ValueKind::Real => "number",
            ValueKind::Boolean => "boolean",
            ValueKind::Enum => "enum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "type")]
    pub kind: ValueKind,
    #[serde(with = "literal_json")]
    pub default: ArgValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nullable: bool,
}

/// Why a value does not fit a hyper-parameter schema.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{param}: {reason}")]
pub struct Violation {
    pub param: String,
    pub reason: String,
}

impl HyperparamSpec {
    /// Checks a concrete value against kind, range and choices. `MASK` and name
    /// references are never valid here.
    pub fn validate(&self, value: &ArgValue) -> Result<(), Violation> {
        let fail = |reason: String| {
            Err(Violation {
                param: self.name.clone(),
                reason,
            })
        };
        match (self.kind, value) {
            (_, ArgValue::Mask) => fail("unresolved MASK placeholder".into()),
            (_, ArgValue::Ref(name)) => fail(format!("'{name}' is not a literal value")),
            (_, ArgValue::None) if self.nullable => Ok(()),
            (_, ArgValue::None) => fail("None is not allowed".into()),
            (ValueKind::Integer, ArgValue::Int(i)) => self.check_range(*i as f64),
            (ValueKind::Real, ArgValue::Int(i)) => self.check_range(*i as f64),
            (ValueKind::Real, ArgValue::Real(r)) => self.check_range(*r),
            (ValueKind::Boolean, ArgValue::Bool(_)) => Ok(()),
            (ValueKind::Enum, ArgValue::Str { value, .. }) => {
                if self.choices.iter().any(|c| c == value) {
                    Ok(())
                } else {
                    fail(format!(
                        "'{value}' is not one of [{}]",
                        self.choices.join(", ")
                    ))
                }
            }
            (kind, other) => fail(format!("expected {kind}, got {}", other.kind_name())),
        }
    }

    fn check_range(&self, x: f64) -> Result<(), Violation> {
        let below = self.min.is_some_and(|m| x < m);
        let above = self.max.is_some_and(|m| x > m);
        if below || above {
            let bound = |b: Option<f64>| b.map_or("-".to_string(), |v| v.to_string());
            return Err(Violation {
                param: self.name.clone(),
                reason: format!(
                    "{x} is outside the range [{}, {}]",
                    bound(self.min),
                    bound(self.max)
                ),
            });
        }
        Ok(())
    }

    fn check_self(&self) -> Result<(), String> {
        if self.kind == ValueKind::Enum && self.choices.is_empty() {
            return Err(format!("enum '{}' has no choices", self.name));
        }
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if lo > hi {
                return Err(format!("'{}' has min {lo} > max {hi}", self.name));
            }
        }
        self.validate(&self.default)
            .map_err(|v| format!("default violates its schema: {v}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub name: String,
    pub kind: OperatorKind,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub executable: bool,
    #[serde(default)]
    pub hyperparams: Vec<HyperparamSpec>,
}

impl OperatorSpec {
    pub fn hyperparam(&self, name: &str) -> Option<&HyperparamSpec> {
        self.hyperparams.iter().find(|h| h.name == name)
    }
}

#[derive(Deserialize)]
struct ManifestDoc {
    #[serde(default)]
    version: String,
    #[serde(default)]
    operators: Vec<OperatorSpec>,
}

/// Immutable, name-sorted set of operator specifications.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    operators: BTreeMap<String, OperatorSpec>,
    manifest_version: String,
}

impl Registry {
    /// The manifest shipped with this crate.
    pub fn builtin() -> Registry {
        Registry::from_json(BUILTIN_MANIFEST).expect("builtin manifest is valid")
    }

    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Registry::from_json(&text)
    }

    /// Parses a manifest document. Whitespace-only text is an empty registry.
    pub fn from_json(text: &str) -> Result<Registry, RegistryError> {
        if text.trim().is_empty() {
            return Ok(Registry::default());
        }
        let doc: ManifestDoc = serde_json::from_str(text)?;
        let mut operators = BTreeMap::new();
        for (index, op) in doc.operators.into_iter().enumerate() {
            let invalid = |message: String| RegistryError::InvalidEntry {
                index,
                operator: op.name.clone(),
                message,
            };
            if op.name.is_empty() {
                return Err(invalid("empty operator name".into()));
            }
            for (i, hp) in op.hyperparams.iter().enumerate() {
                if op.hyperparams[..i].iter().any(|h| h.name == hp.name) {
                    return Err(invalid(format!("duplicate hyper-parameter '{}'", hp.name)));
                }
                hp.check_self().map_err(invalid)?;
            }
            if operators.contains_key(&op.name) {
                return Err(RegistryError::DuplicateOperator {
                    index,
                    name: op.name,
                });
            }
            operators.insert(op.name.clone(), op);
        }
        Ok(Registry {
            operators,
            manifest_version: doc.version,
        })
    }

    pub fn manifest_version(&self) -> &str {
        &self.manifest_version
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Exact, case-sensitive lookup.
    pub fn lookup(&self, name: &str) -> Option<&OperatorSpec> {
        self.operators.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.operators.contains_key(name)
    }

    /// Operators sorted by name.
    pub fn iter(&self) -> impl Iterator<Item = &OperatorSpec> {
        self.operators.values()
    }

    /// Operators whose name contains `query` case-insensitively, in name order.
    pub fn keyword_filter(&self, query: &str) -> Vec<&OperatorSpec> {
        let needle = query.to_lowercase();
        self.iter()
            .filter(|op| op.name.to_lowercase().contains(&needle))
            .collect()
    }
}

/// Validates a value against one hyper-parameter spec.
pub fn validate_value(spec: &HyperparamSpec, value: &ArgValue) -> Result<(), Violation> {
    spec.validate(value)
}

/// JSON encoding of literal values shared by the manifest and the block wire
/// form: numbers, strings, booleans, `null`, and `{"mask": true}`.
pub mod literal_json {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    use crate::dsl::ArgValue;

    pub fn to_json(value: &ArgValue) -> Value {
        match value {
            ArgValue::Int(i) => Value::from(*i),
            ArgValue::Real(r) => serde_json::Number::from_f64(*r)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            ArgValue::Str { value, .. } => Value::String(value.clone()),
            ArgValue::Bool(b) => Value::Bool(*b),
            ArgValue::None => Value::Null,
            ArgValue::Mask => serde_json::json!({ "mask": true }),
            ArgValue::Ref(name) => serde_json::json!({ "ref": name }),
        }
    }

    pub fn from_json(value: &Value) -> Result<ArgValue, String> {
        Ok(match value {
            Value::Null => ArgValue::None,
            Value::Bool(b) => ArgValue::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => ArgValue::Int(i),
                _ => ArgValue::Real(n.as_f64().ok_or("number out of range")?),
            },
            Value::String(s) => ArgValue::str(s.clone()),
            Value::Object(map) => {
                if map.get("mask") == Some(&Value::Bool(true)) && map.len() == 1 {
                    ArgValue::Mask
                } else if let (Some(Value::String(name)), 1) = (map.get("ref"), map.len()) {
                    ArgValue::Ref(name.clone())
                } else {
                    return Err(format!("unsupported value object {value}"));
                }
            }
            Value::Array(_) => return Err("array values are not supported".into()),
        })
    }

    pub fn serialize<S: Serializer>(value: &ArgValue, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&to_json(value), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ArgValue, D::Error> {
        let v = Value::deserialize(d)?;
        from_json(&v).map_err(D::Error::custom)
    }
}
