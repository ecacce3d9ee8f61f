//! Visualization programs and their rendering into visual traces.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{ColumnMapping, Row, Table};
use crate::trace::{ElementKind, VisualElement, VisualTrace};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Empty,
    Column(String),
    Const(Value),
}

impl Channel {
    pub fn col(name: impl Into<String>) -> Channel {
        Channel::Column(name.into())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Channel::Empty)
    }

    pub fn column(&self) -> Option<&str> {
        match self {
            Channel::Column(c) => Some(c),
            _ => None,
        }
    }

    fn resolve(&self, t: &Table) -> Result<Resolved, RenderError> {
        Ok(match self {
            Channel::Empty => Resolved::Empty,
            Channel::Const(v) => Resolved::Const(v.clone()),
            Channel::Column(c) => Resolved::Col(
                t.column_index(c)
                    .ok_or_else(|| RenderError::MissingColumn(c.clone()))?,
            ),
        })
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Empty => f.write_str("ε"),
            Channel::Column(c) => f.write_str(c),
            Channel::Const(v @ Value::Text(_)) => write!(f, "{:?}", v.to_string()),
            Channel::Const(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Point,
    Circle,
    Text,
    Rect,
    Tick,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orient {
    Vertical,
    Horizontal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerKind {
    Scatter(Mark),
    Line,
    Bar,
    StackedBar(Orient),
    Area,
    StackedArea(Orient),
}

impl LayerKind {
    pub fn channel_names(self) -> &'static [&'static str] {
        match self {
            LayerKind::Scatter(_) => &["x", "y", "shape", "color", "size"],
            LayerKind::Line => &["x", "y", "width", "order", "color"],
            LayerKind::Bar => &["x", "x2", "y", "y2", "color", "width"],
            LayerKind::StackedBar(_) => &["x", "h", "color", "width"],
            LayerKind::Area => &["x", "x2", "y", "y2", "color"],
            LayerKind::StackedArea(_) => &["x", "h", "color"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Scatter(_) => "Scatter",
            LayerKind::Line => "Line",
            LayerKind::Bar => "Bar",
            LayerKind::StackedBar(_) => "StackedBar",
            LayerKind::Area => "Area",
            LayerKind::StackedArea(_) => "StackedArea",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            LayerKind::Scatter(m) => write!(f, "[{}]", format!("{m:?}").to_lowercase()),
            LayerKind::StackedBar(o) | LayerKind::StackedArea(o) => {
                write!(f, "[{}]", format!("{o:?}").to_lowercase())
            }
            _ => Ok(()),
        }
    }
}

/// A single layer: a kind plus one channel per slot of
/// `kind.channel_names()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Layer {
    kind: LayerKind,
    channels: Vec<Channel>,
}

impl Layer {
    pub fn new(kind: LayerKind) -> Layer {
        Layer {
            kind,
            channels: vec![Channel::Empty; kind.channel_names().len()],
        }
    }

    pub fn with(mut self, name: &str, ch: Channel) -> Layer {
        self.set(name, ch);
        self
    }

    pub fn set(&mut self, name: &str, ch: Channel) {
        let i = self.slot(name);
        self.channels[i] = ch;
    }

    fn slot(&self, name: &str) -> usize {
        self.kind
            .channel_names()
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("{} has no channel {name}", self.kind))
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn ch(&self, name: &str) -> &Channel {
        &self.channels[self.slot(name)]
    }

    pub fn channels(&self) -> impl Iterator<Item = (&'static str, &Channel)> {
        self.kind.channel_names().iter().copied().zip(&self.channels)
    }

    pub fn columns(&self) -> Vec<&str> {
        self.channels.iter().filter_map(Channel::column).collect()
    }

    pub fn size(&self) -> usize {
        1 + self.channels.iter().filter(|c| !c.is_empty()).count()
    }

    pub fn rename(&self, m: &ColumnMapping) -> Layer {
        Layer {
            kind: self.kind,
            channels: self.channels.iter().map(|c| rename_channel(c, m)).collect(),
        }
    }

    fn is_horizontal_bar(&self) -> bool {
        !self.ch("x2").is_empty() && self.ch("y2").is_empty()
    }

    /// The visual element kind this layer produces.
    pub fn produces(&self) -> ElementKind {
        match self.kind {
            LayerKind::Scatter(_) => ElementKind::Point,
            LayerKind::Line => ElementKind::Line,
            LayerKind::Bar if self.is_horizontal_bar() => ElementKind::BarH,
            LayerKind::Bar | LayerKind::StackedBar(Orient::Vertical) => ElementKind::BarV,
            LayerKind::StackedBar(Orient::Horizontal) => ElementKind::BarH,
            LayerKind::Area | LayerKind::StackedArea(_) => ElementKind::Area,
        }
    }

    pub fn render(&self, t: &Table) -> Result<VisualTrace, RenderError> {
        let mut out = Vec::new();
        self.render_into(t, t.rows(), &mut out)?;
        Ok(VisualTrace::new(out))
    }

    fn render_into(
        &self,
        t: &Table,
        rows: &[Row],
        out: &mut Vec<VisualElement>,
    ) -> Result<(), RenderError> {
        let r = |name: &str| self.ch(name).resolve(t);
        match self.kind {
            LayerKind::Scatter(_) => {
                let (x, y) = (r("x")?, r("y")?);
                let opt = [("shape", r("shape")?), ("color", r("color")?), ("size", r("size")?)];
                for row in rows {
                    let (Some(xv), Some(yv)) = (x.get(row), y.get(row)) else {
                        continue;
                    };
                    let mut e = VisualElement::new(ElementKind::Point).with("x", xv).with("y", yv);
                    set_optional(&mut e, &opt, row);
                    out.push(e);
                }
            }
            LayerKind::Bar => {
                let (x, x2, y, y2) = (r("x")?, r("x2")?, r("y")?, r("y2")?);
                let opt = [("color", r("color")?), ("width", r("width")?)];
                let horizontal = self.is_horizontal_bar();
                for row in rows {
                    let e = if horizontal {
                        let (Some(yv), Some(a), Some(b)) = (y.get(row), x.get(row), x2.get(row))
                        else {
                            continue;
                        };
                        VisualElement::new(ElementKind::BarH)
                            .with("y", yv)
                            .with("x1", a)
                            .with("x2", b)
                    } else {
                        let Some(xv) = x.get(row) else { continue };
                        let (lo, hi) = match (y.get(row), y2.get(row)) {
                            (Some(a), Some(b)) => (a, b),
                            (Some(a), None) if y2 == Resolved::Empty => (Value::num(0.0), a),
                            _ => continue,
                        };
                        VisualElement::new(ElementKind::BarV)
                            .with("x", xv)
                            .with("y1", lo)
                            .with("y2", hi)
                    };
                    let mut e = e;
                    set_optional(&mut e, &opt, row);
                    out.push(e);
                }
            }
            LayerKind::StackedBar(orient) => {
                let (x, h, color, width) = (r("x")?, r("h")?, r("color")?, r("width")?);
                for (xv, group) in stacks(self, &x, &h, &color, rows)? {
                    for (cv, lo, hi, row) in group {
                        let mut e = match orient {
                            Orient::Vertical => VisualElement::new(ElementKind::BarV)
                                .with("x", xv.clone())
                                .with("y1", lo)
                                .with("y2", hi),
                            Orient::Horizontal => VisualElement::new(ElementKind::BarH)
                                .with("y", xv.clone())
                                .with("x1", lo)
                                .with("x2", hi),
                        };
                        if let Some(c) = cv {
                            e.set("color", c);
                        }
                        if let Some(w) = width.get(row) {
                            e.set("width", w);
                        }
                        out.push(e);
                    }
                }
            }
            LayerKind::Line => {
                let (x, y, width, order, color) =
                    (r("x")?, r("y")?, r("width")?, r("order")?, r("color")?);
                for (cv, group) in group_by(&color, rows) {
                    let mut pts: Vec<(Option<Value>, Value, Value, Option<Value>)> = group
                        .into_iter()
                        .filter_map(|row| {
                            Some((order.get(row), x.get(row)?, y.get(row)?, width.get(row)))
                        })
                        .collect();
                    pts.sort();
                    for w in pts.windows(2) {
                        let (a, b) = (&w[0], &w[1]);
                        if a.1 == b.1 && a.2 == b.2 {
                            continue;
                        }
                        let mut e = VisualElement::new(ElementKind::Line)
                            .with("x1", a.1.clone())
                            .with("y1", a.2.clone())
                            .with("x2", b.1.clone())
                            .with("y2", b.2.clone());
                        if let Some(wv) = &a.3 {
                            e.set("width", wv.clone());
                        }
                        if let Some(c) = &cv {
                            e.set("color", c.clone());
                        }
                        out.push(e);
                    }
                }
            }
            LayerKind::Area => {
                let (x, x2, y, y2, color) = (r("x")?, r("x2")?, r("y")?, r("y2")?, r("color")?);
                let horizontal = !x2.is_empty() && y2.is_empty();
                for (cv, group) in group_by(&color, rows) {
                    // (position, hi, lo) along the area's running axis
                    let mut pts: Vec<(Value, Value, Value)> = group
                        .into_iter()
                        .filter_map(|row| {
                            if horizontal {
                                Some((y.get(row)?, x2.get(row)?, x.get(row)?))
                            } else {
                                let lo = match y2 {
                                    Resolved::Empty => Value::num(0.0),
                                    _ => y2.get(row)?,
                                };
                                Some((x.get(row)?, y.get(row)?, lo))
                            }
                        })
                        .collect();
                    pts.sort();
                    area_segments(&pts, horizontal, cv.as_ref(), out);
                }
            }
            LayerKind::StackedArea(orient) => {
                let (x, h, color) = (r("x")?, r("h")?, r("color")?);
                let mut by_color: BTreeMap<Option<Value>, Vec<(Value, Value, Value)>> =
                    BTreeMap::new();
                for (xv, group) in stacks(self, &x, &h, &color, rows)? {
                    for (cv, lo, hi, _) in group {
                        by_color.entry(cv).or_default().push((xv.clone(), hi, lo));
                    }
                }
                for (cv, mut pts) in by_color {
                    pts.sort();
                    area_segments(&pts, orient == Orient::Horizontal, cv.as_ref(), out);
                }
            }
        }
        Ok(())
    }
}

fn rename_channel(c: &Channel, m: &ColumnMapping) -> Channel {
    match c {
        Channel::Column(n) => Channel::Column(m.apply(n).to_string()),
        other => other.clone(),
    }
}

fn set_optional(e: &mut VisualElement, opt: &[(&str, Resolved)], row: &Row) {
    for (name, res) in opt {
        if let Some(v) = res.get(row) {
            e.set(name, v);
        }
    }
}

fn area_segments(
    pts: &[(Value, Value, Value)],
    horizontal: bool,
    color: Option<&Value>,
    out: &mut Vec<VisualElement>,
) {
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a == b {
            continue;
        }
        let e = VisualElement::new(ElementKind::Area);
        let mut e = if horizontal {
            e.with("y_bl", a.0.clone())
                .with("x_bl", a.2.clone())
                .with("y_br", a.0.clone())
                .with("x_br", a.1.clone())
                .with("y_tl", b.0.clone())
                .with("x_tl", b.2.clone())
                .with("y_tr", b.0.clone())
                .with("x_tr", b.1.clone())
        } else {
            e.with("x_tl", a.0.clone())
                .with("y_tl", a.1.clone())
                .with("x_bl", a.0.clone())
                .with("y_bl", a.2.clone())
                .with("x_tr", b.0.clone())
                .with("y_tr", b.1.clone())
                .with("x_br", b.0.clone())
                .with("y_br", b.2.clone())
        };
        if let Some(c) = color {
            e.set("color", c.clone());
        }
        out.push(e);
    }
}

type Stack<'r> = Vec<(Option<Value>, Value, Value, &'r Row)>;

/// Groups rows by x, orders each group by color and accumulates heights.
fn stacks<'r>(
    layer: &Layer,
    x: &Resolved,
    h: &Resolved,
    color: &Resolved,
    rows: &'r [Row],
) -> Result<Vec<(Value, Stack<'r>)>, RenderError> {
    let mut groups: BTreeMap<Value, Vec<(Option<Value>, f64, &Row)>> = BTreeMap::new();
    for row in rows {
        let Some(xv) = x.get(row) else { continue };
        let hv = h.get(row).unwrap_or(Value::Null);
        let hf = hv.as_f64().ok_or_else(|| RenderError::NonNumeric {
            channel: format!("{}.h", layer.kind.name()),
            value: hv.to_string(),
        })?;
        groups.entry(xv).or_default().push((color.get(row), hf, row));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (xv, mut g) in groups {
        g.sort_by(|a, b| a.0.cmp(&b.0));
        for w in g.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(RenderError::AmbiguousStack {
                    x: xv.to_string(),
                    color: w[0].0.as_ref().map(|c| c.to_string()).unwrap_or_default(),
                });
            }
        }
        let mut acc = 0.0;
        let mut stack = Vec::with_capacity(g.len());
        for (c, hf, row) in g {
            let lo = acc;
            acc += hf;
            stack.push((c, Value::num(lo), Value::num(acc), row));
        }
        out.push((xv, stack));
    }
    Ok(out)
}

fn group_by<'r>(ch: &Resolved, rows: &'r [Row]) -> BTreeMap<Option<Value>, Vec<&'r Row>> {
    let mut g: BTreeMap<Option<Value>, Vec<&Row>> = BTreeMap::new();
    for row in rows {
        g.entry(ch.get(row)).or_default().push(row);
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
enum Resolved {
    Empty,
    Col(usize),
    Const(Value),
}

impl Resolved {
    /// The channel's value on `row`; nulls read as absent.
    fn get(&self, row: &Row) -> Option<Value> {
        match self {
            Resolved::Empty => None,
            Resolved::Const(v) => Some(v.clone()),
            Resolved::Col(i) => Some(row[*i].clone()).filter(|v| !v.is_null()),
        }
    }

    fn is_empty(&self) -> bool {
        *self == Resolved::Empty
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("channel refers to missing column `{0}`")]
    MissingColumn(String),
    #[error("{channel} needs numbers, found `{value}`")]
    NonNumeric { channel: String, value: String },
    #[error("two stacked marks share x=`{x}` and color=`{color}`")]
    AmbiguousStack { x: String, color: String },
    #[error("program has {expected} layers but {found} tables were supplied")]
    LayerCount { expected: usize, found: usize },
}

/// The layered part of a program, which may be faceted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Plot {
    Single(Layer),
    Multi(Vec<Layer>),
}

impl Plot {
    pub fn layers(&self) -> &[Layer] {
        match self {
            Plot::Single(l) => std::slice::from_ref(l),
            Plot::Multi(ls) => ls,
        }
    }

    fn size(&self) -> usize {
        match self {
            Plot::Single(l) => l.size(),
            Plot::Multi(ls) => 1 + ls.iter().map(|l| l.size() + 1).sum::<usize>(),
        }
    }

    fn rename(&self, m: &ColumnMapping) -> Plot {
        match self {
            Plot::Single(l) => Plot::Single(l.rename(m)),
            Plot::Multi(ls) => Plot::Multi(ls.iter().map(|l| l.rename(m)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VizProgram {
    pub plot: Plot,
    /// `Some((col, row))` for a faceted program.
    pub facets: Option<(Channel, Channel)>,
}

impl VizProgram {
    pub fn layer(l: Layer) -> VizProgram {
        VizProgram {
            plot: Plot::Single(l),
            facets: None,
        }
    }

    pub fn multi_layer(ls: Vec<Layer>) -> VizProgram {
        assert!(ls.len() >= 2, "a multi-layer program needs at least two layers");
        VizProgram {
            plot: Plot::Multi(ls),
            facets: None,
        }
    }

    pub fn multi_plot(plot: Plot, col: Channel, row: Channel) -> VizProgram {
        VizProgram {
            plot,
            facets: Some((col, row)),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        self.plot.layers()
    }

    pub fn layer_count(&self) -> usize {
        self.layers().len()
    }

    pub fn size(&self) -> usize {
        match &self.facets {
            None => self.plot.size(),
            Some((c, r)) => {
                1 + self.plot.size() + usize::from(!c.is_empty()) + usize::from(!r.is_empty())
            }
        }
    }

    pub fn rename(&self, m: &ColumnMapping) -> VizProgram {
        VizProgram {
            plot: self.plot.rename(m),
            facets: self
                .facets
                .as_ref()
                .map(|(c, r)| (rename_channel(c, m), rename_channel(r, m))),
        }
    }

    /// Columns the given layer reads, including facet columns.
    pub fn layer_columns(&self, i: usize) -> Vec<&str> {
        let mut cols = self.layers()[i].columns();
        if let Some((c, r)) = &self.facets {
            cols.extend(c.column());
            cols.extend(r.column());
        }
        cols
    }

    /// Renders with one table per layer, or a single table shared by all.
    pub fn render(&self, tables: &[&Table]) -> Result<VisualTrace, RenderError> {
        let n = self.layer_count();
        if tables.len() != n && tables.len() != 1 {
            return Err(RenderError::LayerCount {
                expected: n,
                found: tables.len(),
            });
        }
        let mut out = Vec::new();
        for (i, layer) in self.layers().iter().enumerate() {
            let t = if tables.len() == 1 { tables[0] } else { tables[i] };
            match &self.facets {
                None => layer.render_into(t, t.rows(), &mut out)?,
                Some((c, r)) => {
                    let (c, r) = (c.resolve(t)?, r.resolve(t)?);
                    let mut groups: BTreeMap<(Option<Value>, Option<Value>), Vec<Row>> =
                        BTreeMap::new();
                    for row in t.rows() {
                        groups.entry((c.get(row), r.get(row))).or_default().push(row.clone());
                    }
                    for ((cv, rv), rows) in groups {
                        let start = out.len();
                        layer.render_into(t, &rows, &mut out)?;
                        for e in &mut out[start..] {
                            if let Some(v) = &cv {
                                e.set("col", v.clone());
                            }
                            if let Some(v) = &rv {
                                e.set("row", v.clone());
                            }
                        }
                    }
                }
            }
        }
        Ok(VisualTrace::new(out))
    }

    pub fn render_one(&self, t: &Table) -> Result<VisualTrace, RenderError> {
        self.render(&[t])
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        let mut first = true;
        for (n, c) in self.channels() {
            if c.is_empty() {
                continue;
            }
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{n}={c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Plot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plot::Single(l) => write!(f, "{l}"),
            Plot::Multi(ls) => {
                f.write_str("MultiLayer(")?;
                for (i, l) in ls.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for VizProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.facets {
            None => write!(f, "{}", self.plot),
            Some((c, r)) => write!(f, "MultiPlot({}, col={c}, row={r})", self.plot),
        }
    }
}
