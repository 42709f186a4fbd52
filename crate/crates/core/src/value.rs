//! Typed values for tunable parameters.
//!
//! Every candidate, default, and assignment in a space is one of these
//! variants. Values are plain data: comparisons are exact, floats included,
//! because candidates are finite lists fixed at load time, never the result
//! of arithmetic at lookup time.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Kind of a tunable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Boolean,
    Integer,
    Float,
    Categorical,
    String,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Boolean => "boolean",
            ParamKind::Integer => "integer",
            ParamKind::Float => "float",
            ParamKind::Categorical => "categorical",
            ParamKind::String => "string",
        };
        f.write_str(s)
    }
}

/// A single parameter value.
///
/// Untagged on the wire: `true`, `42`, `0.75`, `"-Xmx1024m"` all parse to the
/// natural variant. Categorical and string parameters both carry `Str`; the
/// distinction lives in [`ParamKind`] on the parameter, not on the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    /// True when this value is admissible for a parameter of `kind`.
    /// Integer literals are accepted for float parameters (TOML and JSON
    /// writers rarely spell `1.0`); the space loader coerces them.
    pub fn matches_kind(&self, kind: ParamKind) -> bool {
        matches!(
            (self, kind),
            (Value::Bool(_), ParamKind::Boolean)
                | (Value::Int(_), ParamKind::Integer)
                | (Value::Float(_), ParamKind::Float)
                | (Value::Int(_), ParamKind::Float)
                | (Value::Str(_), ParamKind::Categorical)
                | (Value::Str(_), ParamKind::String)
        )
    }

    /// Coerce to the canonical representation for `kind`.
    /// Only int-to-float widening changes anything.
    pub fn canonicalize(self, kind: ParamKind) -> Value {
        match (self, kind) {
            (Value::Int(i), ParamKind::Float) => Value::Float(i as f64),
            (v, _) => v,
        }
    }

    /// Numeric view, for rule arithmetic. Booleans and strings have none.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// True unless the value is a non-finite float.
    pub fn is_finite(&self) -> bool {
        match self {
            Value::Float(f) => f.is_finite(),
            _ => true,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}
