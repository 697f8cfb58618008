//! Dynamically tagged values flowing through the engine.
//!
//! Every key and value a job emits is a [`Value`]. The engine stores them in
//! hash maps, sorts snapshots into a canonical order, and compares results
//! against oracles, so `Value` implements `Eq`, `Ord`, and `Hash` by hand with
//! float semantics chosen to keep the three traits mutually consistent:
//! floats compare by `total_cmp` and hash/equate by bit pattern. That makes
//! `-0.0 != 0.0` and `NaN == NaN` (same payload), which is exactly what a
//! hash-map key needs. Numeric *tolerance* lives in [`Value::approx_eq`],
//! not in `Eq`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A runtime value: integer, float, text, or a vector of values.
///
/// Vectors may nest, though the kernel language only ever constructs flat
/// numeric vectors.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Vec(Vec<Value>),
}

/// Discriminant-only view of a [`Value`], used for type checks and the
/// cross-tag ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueTag {
    Int,
    Float,
    Text,
    Vec,
}

impl ValueTag {
    pub fn name(self) -> &'static str {
        match self {
            ValueTag::Int => "int",
            ValueTag::Float => "float",
            ValueTag::Text => "text",
            ValueTag::Vec => "vec",
        }
    }
}

impl Value {
    pub fn tag(&self) -> ValueTag {
        match self {
            Value::Int(_) => ValueTag::Int,
            Value::Float(_) => ValueTag::Float,
            Value::Text(_) => ValueTag::Text,
            Value::Vec(_) => ValueTag::Vec,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "text",
            Value::Vec(_) => "vec",
        }
    }

    /// Tolerant equality: ints, text, and structure must match exactly,
    /// floats may differ by `rel_tol` relative to the larger magnitude.
    pub fn approx_eq(&self, other: &Value, rel_tol: f64) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => float_approx_eq(*a, *b, rel_tol),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Vec(a), Value::Vec(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, rel_tol))
            }
            _ => false,
        }
    }
}

fn float_approx_eq(a: f64, b: f64, rel_tol: f64) -> bool {
    if a.to_bits() == b.to_bits() || a == b {
        return true;
    }
    (a - b).abs() <= rel_tol * a.abs().max(b.abs())
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Vec(a), Value::Vec(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tag().hash(state);
        match self {
            Value::Int(n) => n.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Text(s) => s.hash(state),
            Value::Vec(v) => v.hash(state),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Total order: first by tag (`Int < Float < Text < Vec`), then within
    /// the tag. Floats use `total_cmp`, vectors compare lexicographically.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Vec(a), Value::Vec(b)) => a.cmp(b),
            _ => self.tag().cmp(&other.tag()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            // {:?} keeps a trailing `.0`, so floats stay visually distinct
            // from ints and survive a round-trip through the kernel parser.
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Vec(v) => {
                write!(f, "[")?;
                for (i, item) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}
