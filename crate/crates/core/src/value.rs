//! Runtime values shared by the interpreter, the term evaluator and the
//! hardware models.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use thiserror::Error;

use crate::syntax::{format_float, BinOp, Literal, Type};

#[derive(Debug, Clone)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(BigInt),
    Float(f64),
    /// Field values in declaration order.
    Struct { name: String, fields: Vec<(String, Value)> },
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(n.into())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Struct { fields, .. } => fields.iter().find(|(f, _)| f == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// The type this value inhabits.
    pub fn ty(&self) -> Type {
        match self {
            Value::Unit => Type::Void,
            Value::Bool(_) => Type::Bool,
            Value::Int(_) => Type::Int,
            Value::Float(_) => Type::Float,
            Value::Struct { name, .. } => Type::Struct(name.clone()),
        }
    }

    /// Parses a command-line style input for a primitive type.
    pub fn parse_as(text: &str, ty: &Type) -> Option<Value> {
        let text = text.trim();
        match ty {
            Type::Bool => match text {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            Type::Int => BigInt::from_str(text).ok().map(Value::Int),
            Type::Float => text.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Float),
            Type::Void | Type::Struct(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("operator `{op}` cannot be applied to {left} and {right}")]
pub struct BinOpError {
    pub op: BinOp,
    pub left: Type,
    pub right: Type,
}

/// Applies a binary operator to two evaluated operands. Integer arithmetic is
/// exact; float arithmetic follows IEEE 754.
pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, BinOpError> {
    use BinOp::*;
    let v = match (op, a, b) {
        (Add, Value::Int(x), Value::Int(y)) => Value::Int(x + y),
        (Sub, Value::Int(x), Value::Int(y)) => Value::Int(x - y),
        (Mul, Value::Int(x), Value::Int(y)) => Value::Int(x * y),
        (Add, Value::Float(x), Value::Float(y)) => Value::Float(x + y),
        (Sub, Value::Float(x), Value::Float(y)) => Value::Float(x - y),
        (Mul, Value::Float(x), Value::Float(y)) => Value::Float(x * y),
        (And, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x && *y),
        (Or, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x || *y),
        (Eq, Value::Bool(x), Value::Bool(y)) => Value::Bool(x == y),
        (Ne, Value::Bool(x), Value::Bool(y)) => Value::Bool(x != y),
        (_, Value::Int(x), Value::Int(y)) if op.is_comparison() => Value::Bool(compare(op, x, y)),
        (_, Value::Float(x), Value::Float(y)) if op.is_comparison() => Value::Bool(compare(op, x, y)),
        _ => return Err(BinOpError { op, left: a.ty(), right: b.ty() }),
    };
    Ok(v)
}

fn compare<T: PartialOrd>(op: BinOp, x: &T, y: &T) -> bool {
    match op {
        BinOp::Gt => x > y,
        BinOp::Ge => x >= y,
        BinOp::Eq => x == y,
        BinOp::Ne => x != y,
        BinOp::Le => x <= y,
        BinOp::Lt => x < y,
        _ => unreachable!("not a comparison: {op}"),
    }
}

impl From<&Literal> for Value {
    fn from(l: &Literal) -> Value {
        match l {
            Literal::Unit => Value::Unit,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(n) => Value::Int(n.clone()),
            Literal::Float(x) => Value::Float(*x),
        }
    }
}

// Floats compare by bit pattern so that values can serve as map keys and so
// that two engines computing the same NaN agree.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Struct { name: n1, fields: f1 }, Value::Struct { name: n2, fields: f2 }) => n1 == n2 && f1 == f2,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Unit => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(n) => n.hash(state),
            Value::Float(x) => x.to_bits().hash(state),
            Value::Struct { name, fields } => {
                name.hash(state);
                fields.hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("unit"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Struct { name, fields } => {
                write!(f, "{name}(")?;
                for (i, (_, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}
