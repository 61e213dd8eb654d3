use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::syntax::NodeId;

/// Identity of one heap-allocated array.
pub type HeapId = u32;

#[derive(Clone, Debug)]
pub enum Value {
    Number(f64),
    Boolean(bool),
    String(Arc<str>),
    ArrayRef(HeapId),
    FunctionRef(NodeId),
    Undefined,
}

// Bitwise on numbers so that snapshots containing NaN still compare equal to themselves.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a.to_bits() == b.to_bits(),
            (Value::Boolean(a), Value::Boolean(b)) => a == b,
            (Value::String(a), Value::String(b)) => a == b,
            (Value::ArrayRef(a), Value::ArrayRef(b)) => a == b,
            (Value::FunctionRef(a), Value::FunctionRef(b)) => a == b,
            (Value::Undefined, Value::Undefined) => true,
            _ => false,
        }
    }
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Boolean(_) => "boolean",
            Value::String(_) => "string",
            Value::ArrayRef(_) => "array",
            Value::FunctionRef(_) => "function",
            Value::Undefined => "undefined",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Number(n) => *n != 0.0 && !n.is_nan(),
            Value::Boolean(b) => *b,
            Value::String(s) => !s.is_empty(),
            Value::ArrayRef(_) | Value::FunctionRef(_) => true,
            Value::Undefined => false,
        }
    }

    /// `===` semantics: same type and equal; NaN is unequal to itself, `0 === -0`.
    pub fn strict_equals(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => a == b,
            _ => self == other,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => f.write_str(&js_number_to_string(*n)),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::String(s) => write!(f, "{s:?}"),
            Value::ArrayRef(h) => write!(f, "<array #{h}>"),
            Value::FunctionRef(id) => write!(f, "<function @{id}>"),
            Value::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Value", 2)?;
        st.serialize_field("type", self.type_name())?;
        match self {
            Value::Number(n) if n.is_finite() => st.serialize_field("value", n)?,
            Value::Number(n) => st.serialize_field("value", &js_number_to_string(*n))?,
            Value::Boolean(b) => st.serialize_field("value", b)?,
            Value::String(v) => st.serialize_field("value", v)?,
            Value::ArrayRef(h) => st.serialize_field("value", h)?,
            Value::FunctionRef(id) => st.serialize_field("value", id)?,
            Value::Undefined => st.skip_field("value")?,
        }
        st.end()
    }
}

/// JavaScript's `Number.prototype.toString()` for radix 10.
pub fn js_number_to_string(n: f64) -> String {
    if n.is_nan() {
        return "NaN".into();
    }
    if n.is_infinite() {
        return if n > 0.0 { "Infinity".into() } else { "-Infinity".into() };
    }
    if n == 0.0 {
        return "0".into();
    }
    // `{:e}` yields the shortest round-tripping digits, e.g. "1.2345e-7".
    let sci = format!("{:e}", n.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let k = digits.len() as i32;
    let point = exp + 1;
    let body = if (k..=21).contains(&point) {
        format!("{}{}", digits, "0".repeat((point - k) as usize))
    } else if 0 < point && point <= 21 {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    } else if -6 < point && point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else {
        let sign = if point - 1 < 0 { '-' } else { '+' };
        let frac = if k > 1 { format!(".{}", &digits[1..]) } else { String::new() };
        format!("{}{}e{}{}", &digits[..1], frac, sign, (point - 1).abs())
    };
    if n < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_matches_js() {
        let cases = [
            (3.0, "3"),
            (-2.5, "-2.5"),
            (0.1 + 0.2, "0.30000000000000004"),
            (1e21, "1e+21"),
            (1e20, "100000000000000000000"),
            (1.5e-7, "1.5e-7"),
            (0.000001, "0.000001"),
            (123456.789, "123456.789"),
            (-0.0, "0"),
            (f64::NAN, "NaN"),
            (f64::NEG_INFINITY, "-Infinity"),
        ];
        for (n, want) in cases {
            assert_eq!(js_number_to_string(n), want, "{n}");
        }
    }

    #[test]
    fn equality_semantics() {
        let nan = Value::Number(f64::NAN);
        assert_eq!(nan, nan.clone());
        assert!(!nan.strict_equals(&nan));
        assert!(Value::Number(0.0).strict_equals(&Value::Number(-0.0)));
        assert!(!Value::Number(1.0).strict_equals(&Value::String("1".into())));
    }

    #[test]
    fn truthiness() {
        assert!(!Value::Number(f64::NAN).truthy());
        assert!(!Value::String("".into()).truthy());
        assert!(Value::ArrayRef(0).truthy());
        assert!(!Value::Undefined.truthy());
    }
}
