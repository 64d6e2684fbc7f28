use std::fmt;

use serde::{Deserialize, Serialize};

/// Quote character a string literal was written with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuoteStyle {
    #[default]
    Single,
    Double,
}

/// Value of a single invocation argument.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ArgValue {
    Int(i64),
    Real(f64),
    Str {
        value: String,
        quote: QuoteStyle,
    },
    Bool(bool),
    None,
    /// Placeholder for a value the query does not state.
    Mask,
    /// A bare (possibly dotted) name such as `X` or `df.values`. Only produced by
    /// code mining; pipeline text never contains references.
    Ref(String),
}

impl ArgValue {
    pub fn str(value: impl Into<String>) -> Self {
        ArgValue::Str {
            value: value.into(),
            quote: QuoteStyle::Single,
        }
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, ArgValue::Mask)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ArgValue::Int(i) => Some(*i as f64),
            ArgValue::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::Str { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Short kind name used in diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ArgValue::Int(_) => "integer",
            ArgValue::Real(_) => "real",
            ArgValue::Str { .. } => "string",
            ArgValue::Bool(_) => "boolean",
            ArgValue::None => "None",
            ArgValue::Mask => "MASK",
            ArgValue::Ref(_) => "reference",
        }
    }
}

// Quote style is presentation only; two strings with the same content are equal.
impl PartialEq for ArgValue {
    fn eq(&self, other: &Self) -> bool {
        use ArgValue::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (Real(a), Real(b)) => a.to_bits() == b.to_bits() || a == b,
            (Str { value: a, .. }, Str { value: b, .. }) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (None, None) | (Mask, Mask) => true,
            (Ref(a), Ref(b)) => a == b,
            _ => false,
        }
    }
}

/// Formats a real so that it reparses as a real with the same value.
pub fn format_real(r: f64) -> String {
    let s = format!("{r}");
    if s.contains(['.', 'e', 'E']) || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, value: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in value.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Int(i) => write!(f, "{i}"),
            ArgValue::Real(r) => f.write_str(&format_real(*r)),
            ArgValue::Str { value, .. } => write_quoted(f, value),
            ArgValue::Bool(true) => f.write_str("True"),
            ArgValue::Bool(false) => f.write_str("False"),
            ArgValue::None => f.write_str("None"),
            ArgValue::Mask => f.write_str("MASK"),
            ArgValue::Ref(name) => f.write_str(name),
        }
    }
}

/// Argument key: a keyword, or the position of a positional argument.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArgKey {
    Named(String),
    Positional(usize),
}

impl ArgKey {
    pub fn named(name: impl Into<String>) -> Self {
        ArgKey::Named(name.into())
    }

    pub fn is_named(&self) -> bool {
        matches!(self, ArgKey::Named(_))
    }

    /// Parses the textual form produced by `Display` (`pos3` → positional 3).
    pub fn from_wire(name: &str) -> Self {
        name.strip_prefix("pos")
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|rest| rest.parse().ok())
            .map(ArgKey::Positional)
            .unwrap_or_else(|| ArgKey::Named(name.to_string()))
    }
}

impl fmt::Display for ArgKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgKey::Named(name) => f.write_str(name),
            ArgKey::Positional(i) => write!(f, "pos{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub key: ArgKey,
    pub value: ArgValue,
}

impl Arg {
    pub fn named(name: impl Into<String>, value: ArgValue) -> Self {
        Arg {
            key: ArgKey::Named(name.into()),
            value,
        }
    }

    pub fn positional(index: usize, value: ArgValue) -> Self {
        Arg {
            key: ArgKey::Positional(index),
            value,
        }
    }
}

/// A call of one operator with its arguments, in source order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub operator: String,
    pub args: Vec<Arg>,
}

impl Invocation {
    pub fn new(operator: impl Into<String>) -> Self {
        Invocation {
            operator: operator.into(),
            args: Vec::new(),
        }
    }

    pub fn arg(mut self, name: impl Into<String>, value: ArgValue) -> Self {
        self.args.push(Arg::named(name, value));
        self
    }

    pub fn get(&self, name: &str) -> Option<&ArgValue> {
        self.args
            .iter()
            .find(|a| matches!(&a.key, ArgKey::Named(n) if n == name))
            .map(|a| &a.value)
    }

    /// Copy of this invocation with every argument value replaced by `MASK`.
    pub fn masked(&self) -> Invocation {
        Invocation {
            operator: self.operator.clone(),
            args: self
                .args
                .iter()
                .map(|a| Arg {
                    key: a.key.clone(),
                    value: ArgValue::Mask,
                })
                .collect(),
        }
    }

    pub fn mask_count(&self) -> usize {
        self.args.iter().filter(|a| a.value.is_mask()).count()
    }
}

impl fmt::Display for Invocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.operator)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match &arg.key {
                ArgKey::Named(name) => write!(f, "{name}={}", arg.value)?,
                ArgKey::Positional(_) => write!(f, "{}", arg.value)?,
            }
        }
        f.write_str(")")
    }
}

/// A linear chain of invocations hanging off the Start block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineAst {
    pub steps: Vec<Invocation>,
}

impl PipelineAst {
    pub fn new(steps: Vec<Invocation>) -> Self {
        PipelineAst { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for PipelineAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" >> ")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_keeps_decimal_point() {
        assert_eq!(format_real(1.0), "1.0");
        assert_eq!(format_real(0.2), "0.2");
        assert_eq!(format_real(-3.5), "-3.5");
        assert_eq!(format_real(1e-9), "0.000000001");
    }

    #[test]
    fn string_escapes() {
        assert_eq!(ArgValue::str("it's").to_string(), r"'it\'s'");
        assert_eq!(ArgValue::str(r"a\b").to_string(), r"'a\\b'");
    }

    #[test]
    fn quote_style_ignored_by_equality() {
        let double = ArgValue::Str {
            value: "mean".into(),
            quote: QuoteStyle::Double,
        };
        assert_eq!(double, ArgValue::str("mean"));
        assert_eq!(double.to_string(), "'mean'");
    }

    #[test]
    fn arg_key_wire_names() {
        assert_eq!(ArgKey::from_wire("pos0"), ArgKey::Positional(0));
        assert_eq!(ArgKey::from_wire("pos12"), ArgKey::Positional(12));
        assert_eq!(ArgKey::from_wire("pos"), ArgKey::named("pos"));
        assert_eq!(ArgKey::from_wire("position"), ArgKey::named("position"));
        assert_eq!(ArgKey::Positional(1).to_string(), "pos1");
    }

    #[test]
    fn positional_args_print_bare() {
        let inv = Invocation {
            operator: "train_test_split".into(),
            args: vec![
                Arg::positional(0, ArgValue::Ref("X".into())),
                Arg::positional(1, ArgValue::Ref("y".into())),
                Arg::named("test_size", ArgValue::Real(0.2)),
            ],
        };
        assert_eq!(inv.to_string(), "train_test_split(X, y, test_size=0.2)");
        assert_eq!(
            inv.masked().to_string(),
            "train_test_split(MASK, MASK, test_size=MASK)"
        );
    }
}
