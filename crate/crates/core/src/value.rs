//! Primitive cell values.
//!
//! Values have a total order across kinds (`null < number < text < datetime`)
//! so that sorting rows, stacking bars and grouping are always defined.
//! Numbers compare exactly; text parsed into numbers is canonicalized once,
//! at ingestion, so `"7"` and `"7.0"` become the same value.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Num(f64),
    Text(Arc<str>),
    DateTime(NaiveDateTime),
}

impl Value {
    /// Builds a number, mapping non-finite results to null.
    pub fn num(v: f64) -> Value {
        if v.is_finite() {
            // -0.0 and 0.0 must hash alike
            Value::Num(if v == 0.0 { 0.0 } else { v })
        } else {
            Value::Null
        }
    }

    pub fn text(s: impl AsRef<str>) -> Value {
        Value::Text(Arc::from(s.as_ref()))
    }

    /// Infers a value from raw text: number, then ISO-8601 datetime, else text.
    /// The empty string is null.
    pub fn infer(raw: &str) -> Value {
        let s = raw.trim();
        if s.is_empty() {
            return Value::Null;
        }
        if let Some(n) = parse_number(s) {
            return Value::num(n);
        }
        if let Some(dt) = parse_datetime(s) {
            return Value::DateTime(dt);
        }
        Value::text(raw)
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Num(_) => 1,
            Value::Text(_) => 2,
            Value::DateTime(_) => 3,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Num(_) => "number",
            Value::Text(_) => "text",
            Value::DateTime(_) => "datetime",
        }
    }

    /// Equality used when comparing rendered geometry: numbers match within
    /// 1e-9 relative / 1e-12 absolute tolerance, everything else exactly.
    pub fn approx_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => approx_f64(*a, *b),
            _ => self == other,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Num(v) => {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    serde_json::Value::from(*v as i64)
                } else {
                    serde_json::Number::from_f64(*v)
                        .map(serde_json::Value::Number)
                        .unwrap_or(serde_json::Value::Null)
                }
            }
            Value::Text(s) => serde_json::Value::String(s.to_string()),
            Value::DateTime(_) => serde_json::Value::String(self.to_string()),
        }
    }

    /// Converts a JSON scalar. Strings go through the same inference as CSV
    /// cells; booleans become text.
    pub fn from_json(v: &serde_json::Value) -> Result<Value, String> {
        match v {
            serde_json::Value::Null => Ok(Value::Null),
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Value::num)
                .ok_or_else(|| format!("unrepresentable number {n}")),
            serde_json::Value::String(s) => Ok(Value::infer(s)),
            serde_json::Value::Bool(b) => Ok(Value::text(b.to_string())),
            other => Err(format!("expected a scalar, found {other}")),
        }
    }
}

pub(crate) fn approx_f64(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= 1e-12 || diff <= 1e-9 * a.abs().max(b.abs())
}

fn parse_number(s: &str) -> Option<f64> {
    // f64::from_str accepts "inf"/"nan"; those are text here
    let first = s.as_bytes()[0];
    if !(first.is_ascii_digit() || first == b'-' || first == b'+' || first == b'.') {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_time(NaiveTime::MIN))
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::DateTime(a), Value::DateTime(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Num(v) => v.to_bits().hash(state),
            Value::Text(s) => s.hash(state),
            Value::DateTime(d) => d.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Num(v) => {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    write!(f, "{}", *v as i64)
                } else {
                    write!(f, "{v}")
                }
            }
            Value::Text(s) => f.write_str(s),
            Value::DateTime(d) => {
                if d.time() == NaiveTime::MIN {
                    write!(f, "{}", d.format("%Y-%m-%d"))
                } else {
                    write!(f, "{}", d.format("%Y-%m-%dT%H:%M:%S%.f"))
                }
            }
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::num(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::num(v as f64)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::num(v as f64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::text(v)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        Value::from_json(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inference_order() {
        assert_eq!(Value::infer("7"), Value::num(7.0));
        assert_eq!(Value::infer("7.0"), Value::infer("7"));
        assert!(matches!(Value::infer("2020-01-03"), Value::DateTime(_)));
        assert!(matches!(Value::infer("2020-01-03T10:00:00Z"), Value::DateTime(_)));
        assert_eq!(Value::infer("M"), Value::text("M"));
        assert_eq!(Value::infer("inf"), Value::text("inf"));
        assert_eq!(Value::infer(""), Value::Null);
    }

    #[test]
    fn cross_kind_order() {
        let mut vs = vec![
            Value::infer("2020-01-01"),
            Value::text("a"),
            Value::num(3.0),
            Value::Null,
        ];
        vs.sort();
        assert_eq!(
            vs.iter().map(Value::kind_name).collect::<Vec<_>>(),
            ["null", "number", "text", "datetime"]
        );
    }

    #[test]
    fn negative_zero_is_zero() {
        assert_eq!(Value::num(-0.0), Value::num(0.0));
        use std::collections::hash_map::DefaultHasher;
        let h = |v: &Value| {
            let mut s = DefaultHasher::new();
            v.hash(&mut s);
            s.finish()
        };
        assert_eq!(h(&Value::num(-0.0)), h(&Value::num(0.0)));
    }

    #[test]
    fn display_round_trips_through_inference() {
        for raw in ["7", "2.5", "-3", "Q1", "2021-05-01", "2021-05-01T10:30:00"] {
            let v = Value::infer(raw);
            assert_eq!(Value::infer(&v.to_string()), v, "{raw}");
        }
    }

    #[test]
    fn tolerance() {
        assert!(Value::num(0.1 + 0.2).approx_eq(&Value::num(0.3)));
        assert!(!Value::num(1.0).approx_eq(&Value::num(1.0001)));
        assert!(!Value::num(1.0).approx_eq(&Value::text("1")));
    }
}
