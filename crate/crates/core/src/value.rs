use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque datum used for inputs, message payloads, decisions and
/// probabilistic-object states.
///
/// The derived order (`Bot < Int < Sym < Tuple`, then lexicographic) is the
/// canonical serialization order used for every tiebreak in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    /// The distinguished "no value" outcome.
    Bot,
    Int(i64),
    Sym(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }

    pub fn tuple(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Tuple(items.into_iter().collect())
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Parses the textual form used on the command line: `_` or `⊥` is
    /// [`Value::Bot`], an integer literal is [`Value::Int`], anything else a
    /// symbol.
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s == "_" || s == "⊥" {
            Value::Bot
        } else if let Ok(i) = s.parse() {
            Value::Int(i)
        } else {
            Value::sym(s)
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bot => f.write_str("⊥"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::sym(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}
