//! Cell values and spreadsheet-style operations on them.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::codegen::number_text;
use crate::expr::{ArithOp, CmpOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorValue {
    #[serde(rename = "#DIV/0!")]
    Div0,
    #[serde(rename = "#VALUE!")]
    Value,
    #[serde(rename = "#REF!")]
    Ref,
    #[serde(rename = "#NUM!")]
    Num,
}

impl fmt::Display for ErrorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorValue::Div0 => "#DIV/0!",
            ErrorValue::Value => "#VALUE!",
            ErrorValue::Ref => "#REF!",
            ErrorValue::Num => "#NUM!",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(untagged)]
pub enum Value {
    #[default]
    Blank,
    Number(f64),
    Bool(bool),
    Text(String),
    Error(ErrorValue),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Blank => Ok(()),
            Value::Number(v) => f.write_str(&number_text(*v)),
            Value::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            Value::Text(s) => f.write_str(s),
            Value::Error(e) => e.fmt(f),
        }
    }
}

impl Value {
    pub fn is_blank(&self) -> bool {
        matches!(self, Value::Blank)
    }

    /// Blank reads as 0, booleans as 1/0.
    pub fn to_number(&self) -> Result<f64, ErrorValue> {
        match self {
            Value::Blank => Ok(0.0),
            Value::Number(v) => Ok(*v),
            Value::Bool(b) => Ok(if *b { 1.0 } else { 0.0 }),
            Value::Text(_) => Err(ErrorValue::Value),
            Value::Error(e) => Err(*e),
        }
    }

    /// Blank reads as FALSE, numbers as nonzero.
    pub fn to_bool(&self) -> Result<bool, ErrorValue> {
        match self {
            Value::Blank => Ok(false),
            Value::Number(v) => Ok(*v != 0.0),
            Value::Bool(b) => Ok(*b),
            Value::Text(_) => Err(ErrorValue::Value),
            Value::Error(e) => Err(*e),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// A formula whose result is an empty cell shows 0.
    pub fn settle(self) -> Value {
        if self.is_blank() {
            Value::Number(0.0)
        } else {
            self
        }
    }
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(v)
    } else {
        Value::Error(ErrorValue::Num)
    }
}

pub fn negate(a: &Value) -> Value {
    match a.to_number() {
        Ok(v) => num(-v),
        Err(e) => Value::Error(e),
    }
}

pub fn arith(op: ArithOp, a: &Value, b: &Value) -> Value {
    let (x, y) = match (a.to_number(), b.to_number()) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return Value::Error(e),
    };
    match op {
        ArithOp::Add => num(x + y),
        ArithOp::Sub => num(x - y),
        ArithOp::Mul => num(x * y),
        ArithOp::Div if y == 0.0 => Value::Error(ErrorValue::Div0),
        ArithOp::Div => num(x / y),
    }
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Number(_) | Value::Blank => 0,
        Value::Text(_) => 1,
        Value::Bool(_) => 2,
        Value::Error(_) => 3,
    }
}

/// Spreadsheet comparison: a blank takes the other side's type; otherwise
/// numbers < text < booleans. Exact, no tolerance.
pub fn compare(op: CmpOp, a: &Value, b: &Value) -> Value {
    if let Value::Error(e) = a {
        return Value::Error(*e);
    }
    if let Value::Error(e) = b {
        return Value::Error(*e);
    }
    let blank_as = |other: &Value| match other {
        Value::Bool(_) => Value::Bool(false),
        Value::Text(_) => Value::Text(String::new()),
        _ => Value::Number(0.0),
    };
    let a = if a.is_blank() { blank_as(b) } else { a.clone() };
    let b = if b.is_blank() { blank_as(&a) } else { b.clone() };
    let ord = match (&a, &b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Text(x), Value::Text(y)) => x.to_lowercase().cmp(&y.to_lowercase()),
        _ => rank(&a).cmp(&rank(&b)),
    };
    Value::Bool(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

/// A function argument: one value, or the cells of a range.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Scalar(Value),
    Range(Vec<Value>),
}

impl Arg {
    fn scalar(&self) -> Value {
        match self {
            Arg::Scalar(v) => v.clone(),
            // A range where one value is expected.
            Arg::Range(vs) if vs.len() == 1 => vs[0].clone(),
            Arg::Range(_) => Value::Error(ErrorValue::Value),
        }
    }
}

/// Numbers contributed to SUM/MIN/MAX: scalars are coerced, range cells
/// count only when numeric.
fn numbers(args: &[Arg]) -> Result<Vec<f64>, ErrorValue> {
    let mut out = Vec::new();
    for a in args {
        match a {
            Arg::Scalar(v) => out.push(v.to_number()?),
            Arg::Range(vs) => {
                for v in vs {
                    match v {
                        Value::Number(x) => out.push(*x),
                        Value::Error(e) => return Err(*e),
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(out)
}

fn booleans(args: &[Arg]) -> Result<Vec<bool>, ErrorValue> {
    let mut out = Vec::new();
    for a in args {
        match a {
            Arg::Scalar(v) => out.push(v.to_bool()?),
            Arg::Range(vs) => {
                for v in vs {
                    match v {
                        Value::Bool(b) => out.push(*b),
                        Value::Number(x) => out.push(*x != 0.0),
                        Value::Error(e) => return Err(*e),
                        _ => {}
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ErrorValue::Value);
    }
    Ok(out)
}

fn lift(r: Result<Value, ErrorValue>) -> Value {
    r.unwrap_or_else(Value::Error)
}

/// Half away from zero, like the spreadsheet.
pub fn round(x: f64, digits: f64) -> f64 {
    let d = digits.trunc() as i32;
    if d >= 0 {
        let f = 10f64.powi(d);
        let y = (x * f).round() / f;
        if y.is_finite() { y } else { x }
    } else {
        let f = 10f64.powi(-d);
        (x / f).round() * f
    }
}

/// Evaluates a value-level function; INDEX, IF, COLUMN and COLUMNS need the
/// grid and are handled by the caller.
pub fn call(name: &str, args: &[Arg]) -> Value {
    match name {
        "SUM" => lift(numbers(args).map(|v| num(v.iter().sum()))),
        "MIN" => lift(numbers(args).map(|v| num(v.iter().copied().reduce(f64::min).unwrap_or(0.0)))),
        "MAX" => lift(numbers(args).map(|v| num(v.iter().copied().reduce(f64::max).unwrap_or(0.0)))),
        "ABS" => lift(args[0].scalar().to_number().map(|x| num(x.abs()))),
        "ROUND" => match (args[0].scalar().to_number(), args[1].scalar().to_number()) {
            (Ok(x), Ok(d)) => num(round(x, d)),
            (Err(e), _) | (_, Err(e)) => Value::Error(e),
        },
        "AND" => lift(booleans(args).map(|b| Value::Bool(b.iter().all(|x| *x)))),
        "OR" => lift(booleans(args).map(|b| Value::Bool(b.iter().any(|x| *x)))),
        "NOT" => lift(args[0].scalar().to_bool().map(|b| Value::Bool(!b))),
        "COUNTA" => {
            let n: usize = args
                .iter()
                .map(|a| match a {
                    Arg::Scalar(_) => 1,
                    Arg::Range(vs) => vs.iter().filter(|v| !v.is_blank()).count(),
                })
                .sum();
            Value::Number(n as f64)
        }
        "IF" => {
            let cond = args[0].scalar();
            match cond.to_bool() {
                Ok(true) => args[1].scalar(),
                Ok(false) => args.get(2).map(Arg::scalar).unwrap_or(Value::Bool(false)),
                Err(e) => Value::Error(e),
            }
        }
        _ => Value::Error(ErrorValue::Value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_by_zero_propagates() {
        let e = arith(ArithOp::Div, &Value::Number(1.0), &Value::Number(0.0));
        assert_eq!(e, Value::Error(ErrorValue::Div0));
        assert_eq!(arith(ArithOp::Add, &e, &Value::Number(1.0)), e);
        assert_eq!(compare(CmpOp::Eq, &e, &Value::Number(1.0)), e);
        assert_eq!(call("AND", &[Arg::Scalar(e.clone())]), e);
    }

    #[test]
    fn blanks_read_as_zero_or_false() {
        assert_eq!(arith(ArithOp::Add, &Value::Blank, &Value::Number(2.0)), Value::Number(2.0));
        assert_eq!(compare(CmpOp::Eq, &Value::Blank, &Value::Bool(false)), Value::Bool(true));
        assert_eq!(compare(CmpOp::Eq, &Value::Blank, &Value::Number(0.0)), Value::Bool(true));
    }

    #[test]
    fn round_half_away_from_zero() {
        assert_eq!(round(2.5, 0.0), 3.0);
        assert_eq!(round(-2.5, 0.0), -3.0);
        assert_eq!(round(1234.0, -2.0), 1200.0);
        assert_eq!(round(0.125, 2.0), 0.13);
    }

    #[test]
    fn aggregates() {
        let r = Arg::Range(vec![Value::Number(1.0), Value::Blank, Value::Text("x".into()), Value::Number(2.0)]);
        assert_eq!(call("SUM", &[r.clone()]), Value::Number(3.0));
        assert_eq!(call("COUNTA", &[r]), Value::Number(3.0));
        assert_eq!(call("AND", &[Arg::Range(vec![Value::Blank])]), Value::Error(ErrorValue::Value));
        assert_eq!(call("MIN", &[Arg::Scalar(Value::Number(3.0)), Arg::Scalar(Value::Number(-1.0))]), Value::Number(-1.0));
    }
}
