//! The universal datum exchanged by every part of the farm.
//!
//! A [`Value`] is a real, an integer, a string or a (possibly heterogeneous)
//! list of values. Its canonical text form is used on the wire, in batch
//! output files and on the command line:
//!
//! ```text
//! value := real | int | string | '{' [value (',' value)*] '}'
//! ```

mod env;
mod list;
mod parse;
mod rng;

pub use env::{is_identifier, Env, Lookup};
pub use list::{chop, flatten, partition, random_table, DEFAULT_CHOP_TOLERANCE};
pub(crate) use parse::parse_number;
pub use parse::{parse_value, ParseError, Parser};
pub use rng::Rng;

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Integer(i64),
    Text(String),
    List(Vec<Value>),
}

/// Errors raised by list utilities when a value has the wrong shape.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("expected {expected}, found {found}")]
    Type { expected: &'static str, found: String },
    #[error("list of length {len} cannot be partitioned into rows of {k}")]
    Indivisible { len: usize, k: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

impl Value {
    pub fn list<I: IntoIterator<Item = Value>>(items: I) -> Self {
        Value::List(items.into_iter().collect())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    /// Short name of the variant, used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Real(_) => "real",
            Value::Integer(_) => "integer",
            Value::Text(_) => "string",
            Value::List(_) => "list",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Real(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Integer(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Real(_) | Value::Integer(_))
    }

    /// A matrix is a non-empty list of equal-length, non-empty lists of numbers.
    pub fn is_matrix(&self) -> bool {
        let Some(rows) = self.as_list() else {
            return false;
        };
        let Some(first) = rows.first().and_then(Value::as_list) else {
            return false;
        };
        let cols = first.len();
        cols > 0
            && rows.iter().all(|row| {
                row.as_list()
                    .is_some_and(|r| r.len() == cols && r.iter().all(Value::is_numeric))
            })
    }

    /// Canonical single-line text form. `parse_value` inverts it for every
    /// value whose reals are finite.
    pub fn print(&self) -> String {
        self.to_string()
    }
}

/// Shortest decimal that reads back to the same `f64`, always carrying a
/// decimal point or an exponent so it never reads back as an integer.
pub(crate) fn format_real(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        s + ".0"
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => f.write_str(&format_real(*x)),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::List(items) => {
                f.write_str("{")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Integer(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

/// Print a value in canonical form.
pub fn print_value(v: &Value) -> String {
    v.print()
}
