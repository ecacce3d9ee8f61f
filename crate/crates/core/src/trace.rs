//! Visual traces: multisets of attributed visual elements. A trace is both
//! what the user sketches and what a visual program renders.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Point,
    Line,
    BarV,
    BarH,
    Area,
}

pub const ALL_KINDS: [ElementKind; 5] = [
    ElementKind::Point,
    ElementKind::Line,
    ElementKind::BarV,
    ElementKind::BarH,
    ElementKind::Area,
];

pub const AREA_CORNERS: [&str; 8] = ["x_tl", "y_tl", "x_bl", "y_bl", "x_tr", "y_tr", "x_br", "y_br"];

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Point => "point",
            ElementKind::Line => "line",
            ElementKind::BarV => "barV",
            ElementKind::BarH => "barH",
            ElementKind::Area => "area",
        }
    }

    pub fn parse(s: &str) -> Option<ElementKind> {
        ALL_KINDS.into_iter().find(|k| k.name() == s)
    }

    /// Attribute names in display order.
    pub fn attributes(self) -> &'static [&'static str] {
        match self {
            ElementKind::Point => &["x", "y", "shape", "color", "size", "col", "row"],
            ElementKind::Line => &["x1", "y1", "x2", "y2", "width", "color", "col", "row"],
            ElementKind::BarV => &["x", "y1", "y2", "width", "color", "col", "row"],
            ElementKind::BarH => &["y", "x1", "x2", "width", "color", "col", "row"],
            ElementKind::Area => &[
                "x_tl", "y_tl", "x_bl", "y_bl", "x_tr", "y_tr", "x_br", "y_br", "color", "col",
                "row",
            ],
        }
    }

    fn intern(self, attr: &str) -> Option<&'static str> {
        self.attributes().iter().copied().find(|a| *a == attr)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace must be a JSON array of elements")]
    NotAnArray,
    #[error("element {index}: {message}")]
    Malformed { index: usize, message: String },
    #[error("element {index}: unknown kind `{kind}`")]
    UnknownKind { index: usize, kind: String },
    #[error("element {index}: `{kind}` has no attribute `{attr}`")]
    UnknownAttribute {
        index: usize,
        kind: ElementKind,
        attr: String,
    },
}

/// One visual element. Attributes missing from the map are unset; in a
/// sketch they match anything.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VisualElement {
    kind: ElementKind,
    attrs: BTreeMap<&'static str, Value>,
}

impl VisualElement {
    pub fn new(kind: ElementKind) -> VisualElement {
        VisualElement {
            kind,
            attrs: BTreeMap::new(),
        }
    }

    /// Builder used by renderers; panics on an attribute the kind lacks,
    /// which is a programming error rather than bad input.
    pub fn with(mut self, attr: &str, v: impl Into<Value>) -> VisualElement {
        self.set(attr, v.into());
        self
    }

    pub fn set(&mut self, attr: &str, v: Value) {
        let key = self
            .kind
            .intern(attr)
            .unwrap_or_else(|| panic!("{} has no attribute {attr}", self.kind));
        self.attrs.insert(key, v);
    }

    pub fn unset(&mut self, attr: &str) {
        self.attrs.remove(attr);
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.attrs.get(attr)
    }

    pub fn attrs(&self) -> impl Iterator<Item = (&'static str, &Value)> {
        self.attrs.iter().map(|(k, v)| (*k, v))
    }

    /// Enforces `x1 ≤ x2` style orderings by swapping endpoints. Only fully
    /// specified pairs are touched.
    pub fn canonical(mut self) -> VisualElement {
        match self.kind {
            ElementKind::Line => {
                let key = |e: &Self, a: &str, b: &str| (e.get(a).cloned(), e.get(b).cloned());
                let all = ["x1", "y1", "x2", "y2"].iter().all(|a| self.attrs.contains_key(a));
                if all && key(&self, "x1", "y1") > key(&self, "x2", "y2") {
                    self.swap("x1", "x2");
                    self.swap("y1", "y2");
                }
            }
            ElementKind::BarV => self.order_pair("y1", "y2"),
            ElementKind::BarH => self.order_pair("x1", "x2"),
            ElementKind::Point | ElementKind::Area => {}
        }
        self
    }

    fn order_pair(&mut self, a: &'static str, b: &'static str) {
        if let (Some(va), Some(vb)) = (self.attrs.get(a), self.attrs.get(b)) {
            if va > vb {
                self.swap(a, b);
            }
        }
    }

    fn swap(&mut self, a: &'static str, b: &'static str) {
        let va = self.attrs.remove(a);
        let vb = self.attrs.remove(b);
        if let Some(v) = vb {
            self.attrs.insert(a, v);
        }
        if let Some(v) = va {
            self.attrs.insert(b, v);
        }
    }

    /// Whether `self`, read as a sketch element, is matched by `other`.
    pub fn matches(&self, other: &VisualElement) -> bool {
        self.kind == other.kind
            && self
                .attrs
                .iter()
                .all(|(k, v)| other.attrs.get(k).is_some_and(|w| v.approx_eq(w)))
    }

    pub fn subplot_key(&self) -> (Value, Value) {
        (
            self.get("col").cloned().unwrap_or(Value::Null),
            self.get("row").cloned().unwrap_or(Value::Null),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), self.kind.name().into());
        for a in self.kind.attributes() {
            if let Some(v) = self.attrs.get(a) {
                obj.insert((*a).to_string(), v.to_json());
            }
        }
        serde_json::Value::Object(obj)
    }

    fn from_json(index: usize, v: &serde_json::Value) -> Result<VisualElement, TraceError> {
        let obj = v.as_object().ok_or_else(|| TraceError::Malformed {
            index,
            message: "element must be an object".into(),
        })?;
        let kind_name = obj
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| TraceError::Malformed {
                index,
                message: "missing string field `kind`".into(),
            })?;
        let kind = ElementKind::parse(kind_name).ok_or_else(|| TraceError::UnknownKind {
            index,
            kind: kind_name.to_string(),
        })?;
        let mut e = VisualElement::new(kind);
        for (k, raw) in obj {
            if k == "kind" {
                continue;
            }
            let key = kind.intern(k).ok_or_else(|| TraceError::UnknownAttribute {
                index,
                kind,
                attr: k.clone(),
            })?;
            let val = Value::from_json(raw).map_err(|message| TraceError::Malformed {
                index,
                message: format!("attribute `{k}`: {message}"),
            })?;
            if !val.is_null() {
                e.attrs.insert(key, val);
            }
        }
        Ok(e.canonical())
    }
}

impl fmt::Display for VisualElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        let mut first = true;
        for a in self.kind.attributes() {
            if let Some(v) = self.attrs.get(a) {
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "{a}={v}")?;
            }
        }
        f.write_str(")")
    }
}

/// A multiset of visual elements.
#[derive(Clone, Debug, Default)]
pub struct VisualTrace {
    elements: Vec<VisualElement>,
}

impl VisualTrace {
    pub fn new(elements: Vec<VisualElement>) -> VisualTrace {
        VisualTrace {
            elements: elements.into_iter().map(VisualElement::canonical).collect(),
        }
    }

    pub fn elements(&self) -> &[VisualElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, e: VisualElement) {
        self.elements.push(e.canonical());
    }

    pub fn extend(&mut self, other: VisualTrace) {
        self.elements.extend(other.elements);
    }

    pub fn parse(text: &str) -> Result<VisualTrace, TraceError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| TraceError::Malformed {
            index: 0,
            message: format!("invalid JSON: {e}"),
        })?;
        VisualTrace::from_json(&v)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<VisualTrace, TraceError> {
        let arr = v.as_array().ok_or(TraceError::NotAnArray)?;
        let elements = arr
            .iter()
            .enumerate()
            .map(|(i, e)| VisualElement::from_json(i, e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VisualTrace { elements })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.elements.iter().map(VisualElement::to_json).collect())
    }

    pub fn serialize_text(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("trace JSON is always serializable")
    }

    /// Elements in canonical order; two traces are equal as multisets iff
    /// their sorted forms are equal.
    pub fn sorted(&self) -> Vec<VisualElement> {
        let mut es = self.elements.clone();
        es.sort();
        es
    }

    /// Whether every element of `self` has a distinct matching element in
    /// `big`. Attributes unset in `self` are wildcards.
    pub fn contained_in(&self, big: &VisualTrace) -> bool {
        if self.len() > big.len() {
            return false;
        }
        let adj: Vec<Vec<usize>> = self
            .elements
            .iter()
            .map(|s| {
                big.elements
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| s.matches(b))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        if adj.iter().any(Vec::is_empty) {
            return false;
        }
        // Kuhn's augmenting paths; most-constrained elements first
        let mut order: Vec<usize> = (0..adj.len()).collect();
        order.sort_by_key(|&i| adj[i].len());
        let mut owner: Vec<Option<usize>> = vec![None; big.len()];
        for &i in &order {
            let mut seen = vec![false; big.len()];
            if !augment(i, &adj, &mut owner, &mut seen) {
                return false;
            }
        }
        true
    }

    /// Blocks keyed by the `(col, row)` pair, in key order.
    pub fn partition_by_subplot(&self) -> Vec<((Value, Value), VisualTrace)> {
        let mut groups: BTreeMap<(Value, Value), Vec<VisualElement>> = BTreeMap::new();
        for e in &self.elements {
            groups.entry(e.subplot_key()).or_default().push(e.clone());
        }
        groups
            .into_iter()
            .map(|(k, elements)| (k, VisualTrace { elements }))
            .collect()
    }

    /// Blocks keyed by element kind, in kind order.
    pub fn partition_by_type(&self) -> Vec<(ElementKind, VisualTrace)> {
        let mut groups: BTreeMap<ElementKind, Vec<VisualElement>> = BTreeMap::new();
        for e in &self.elements {
            groups.entry(e.kind).or_default().push(e.clone());
        }
        groups
            .into_iter()
            .map(|(k, elements)| (k, VisualTrace { elements }))
            .collect()
    }
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    owner: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none() || augment(owner[j].unwrap(), adj, owner, seen) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

impl PartialEq for VisualTrace {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.sorted() == other.sorted()
    }
}

impl Eq for VisualTrace {}

impl FromIterator<VisualElement> for VisualTrace {
    fn from_iter<I: IntoIterator<Item = VisualElement>>(iter: I) -> Self {
        VisualTrace::new(iter.into_iter().collect())
    }
}

impl fmt::Display for VisualTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.elements {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

impl Serialize for VisualTrace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VisualTrace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        VisualTrace::from_json(&raw).map_err(serde::de::Error::custom)
    }
}
