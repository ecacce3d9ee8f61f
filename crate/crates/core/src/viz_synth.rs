//! Learning visual programs from a sketch: every candidate pairs a program
//! over made-up column names with the constraint its input table must meet.

use std::collections::BTreeMap;

use crate::constraint::{GapSeg, SideCondition, SpecConstraint, StackReq};
use crate::table::{ColumnMapping, Table};
use crate::trace::{ElementKind, VisualElement, VisualTrace};
use crate::value::Value;
use crate::viz::{Channel, Layer, LayerKind, Mark, Orient, Plot, VizProgram};

/// Per-block cap on layered combinations.
const MAX_PLOT_CANDIDATES: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct VizCandidate {
    pub program: VizProgram,
    /// One spec per layer, over the abstract names of that layer.
    pub specs: Vec<SpecConstraint>,
    /// 0 single layer, 1 multi-plot, 2 multi-layer.
    pub priority: u8,
}

impl VizCandidate {
    pub fn size(&self) -> usize {
        self.program.size()
    }

    /// Abstract columns read by layer `i` that no spec constrains; they are
    /// bound later by trying concrete columns.
    pub fn free_columns(&self, i: usize) -> Vec<String> {
        let bound = self.specs[i].columns();
        let mut out: Vec<String> = Vec::new();
        for c in self.program.layer_columns(i) {
            if !bound.iter().any(|b| b == c) && !out.iter().any(|o| o == c) {
                out.push(c.to_string());
            }
        }
        out
    }

    pub fn facet_columns(&self) -> Vec<String> {
        match &self.program.facets {
            None => Vec::new(),
            Some((c, r)) => c
                .column()
                .into_iter()
                .chain(r.column())
                .map(str::to_string)
                .collect(),
        }
    }
}

/// All candidates for `sketch`, smallest first.
pub fn learn_visual_programs(sketch: &VisualTrace) -> Vec<VizCandidate> {
    if sketch.is_empty() {
        return Vec::new();
    }
    let has_col = sketch.elements().iter().filter(|e| e.get("col").is_some()).count();
    let has_row = sketch.elements().iter().filter(|e| e.get("row").is_some()).count();
    let n = sketch.len();
    if (has_col != 0 && has_col != n) || (has_row != 0 && has_row != n) {
        return Vec::new();
    }

    let mut out: Vec<VizCandidate> = Vec::new();
    if has_col > 0 || has_row > 0 {
        out.extend(multi_plot(sketch, has_col > 0, has_row > 0));
    } else {
        let elems = sketch.elements();
        for pc in plot_candidates(elems) {
            let priority = if matches!(pc.plot, Plot::Multi(_)) { 2 } else { 0 };
            // free facet: only for the chart kinds whose elements stay
            // independent of how rows are split into subplots
            if let Plot::Single(l) = &pc.plot {
                if matches!(l.kind(), LayerKind::Scatter(_) | LayerKind::Bar) {
                    let mut namer = Namer(max_name_index(&pc.plot));
                    let facet = Channel::col(namer.fresh());
                    out.push(VizCandidate {
                        program: VizProgram::multi_plot(pc.plot.clone(), facet, Channel::Empty),
                        specs: pc.specs.clone(),
                        priority: 1,
                    });
                }
            }
            out.push(VizCandidate {
                program: VizProgram {
                    plot: pc.plot,
                    facets: None,
                },
                specs: pc.specs,
                priority,
            });
        }
    }
    dedup(&mut out);
    out.sort_by_key(|c| (c.size(), c.priority));
    out
}

fn dedup(cands: &mut Vec<VizCandidate>) {
    let mut kept: Vec<VizCandidate> = Vec::with_capacity(cands.len());
    for c in cands.drain(..) {
        if !kept.iter().any(|k| k.program == c.program && k.specs == c.specs) {
            kept.push(c);
        }
    }
    *cands = kept;
}

#[derive(Clone, Debug)]
struct PlotCand {
    plot: Plot,
    specs: Vec<SpecConstraint>,
}

fn multi_plot(sketch: &VisualTrace, use_col: bool, use_row: bool) -> Vec<VizCandidate> {
    let blocks = sketch.partition_by_subplot();
    // per block: candidates keyed by plot so blocks can be unified
    let mut per_block: Vec<((Value, Value), Vec<PlotCand>)> = Vec::new();
    for (key, block) in &blocks {
        let stripped: Vec<VisualElement> = block
            .elements()
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.unset("col");
                e.unset("row");
                e
            })
            .collect();
        per_block.push((key.clone(), plot_candidates(&stripped)));
    }
    let (first, rest) = per_block.split_first().expect("sketch is nonempty");
    let mut out = Vec::new();
    for pc in &first.1 {
        let mut parts: Vec<(&(Value, Value), &PlotCand)> = vec![(&first.0, pc)];
        for (key, cands) in rest {
            match cands.iter().find(|c| c.plot == pc.plot) {
                Some(c) => parts.push((key, c)),
                None => break,
            }
        }
        if parts.len() != per_block.len() {
            continue;
        }
        let mut namer = Namer(max_name_index(&pc.plot));
        let fc = use_col.then(|| namer.fresh());
        let fr = use_row.then(|| namer.fresh());
        let specs = (0..pc.specs.len())
            .map(|i| {
                merge_specs(
                    parts.iter().map(|(k, c)| (*k, &c.specs[i])),
                    fc.as_deref(),
                    fr.as_deref(),
                )
            })
            .collect();
        let ch = |n: &Option<String>| n.clone().map(Channel::Column).unwrap_or(Channel::Empty);
        out.push(VizCandidate {
            program: VizProgram::multi_plot(pc.plot.clone(), ch(&fc), ch(&fr)),
            specs,
            priority: 1,
        });
    }
    out
}

/// Conjunction of per-subplot specs, each tagged with its subplot key in
/// the facet columns.
fn merge_specs<'a>(
    parts: impl Iterator<Item = (&'a (Value, Value), &'a SpecConstraint)>,
    fc: Option<&str>,
    fr: Option<&str>,
) -> SpecConstraint {
    let mut tables: Vec<(Vec<String>, Vec<Vec<Value>>)> = Vec::new();
    let mut side: Vec<SideCondition> = Vec::new();
    let facet_names: Vec<String> = fc.into_iter().chain(fr).map(str::to_string).collect();
    for ((cv, rv), spec) in parts {
        let tag: Vec<Value> = fc
            .map(|_| cv.clone())
            .into_iter()
            .chain(fr.map(|_| rv.clone()))
            .collect();
        for (i, t) in spec.tables.iter().enumerate() {
            if tables.len() <= i {
                let mut cols = t.columns().to_vec();
                cols.extend(facet_names.iter().cloned());
                tables.push((cols, Vec::new()));
            }
            for r in t.rows() {
                let mut r = r.clone();
                r.extend(tag.iter().cloned());
                tables[i].1.push(r);
            }
        }
        for (i, s) in spec.side.iter().enumerate() {
            let tagged = tag_side(s, &facet_names, &tag);
            if side.len() <= i {
                side.push(tagged);
            } else {
                append_side(&mut side[i], tagged);
            }
        }
    }
    SpecConstraint {
        tables: tables
            .into_iter()
            .map(|(c, r)| Table::new(c, r).expect("facet names are fresh"))
            .collect(),
        side,
    }
}

fn tag_side(s: &SideCondition, names: &[String], tag: &[Value]) -> SideCondition {
    let mut s = s.clone();
    match &mut s {
        SideCondition::StackedSum { facets, bars, .. } => {
            facets.extend(names.iter().cloned());
            for b in bars {
                b.facets.extend(tag.iter().cloned());
            }
        }
        SideCondition::LineGap { group, segments, .. } => {
            group.extend(names.iter().cloned());
            for seg in segments {
                seg.group.extend(tag.iter().cloned());
            }
        }
    }
    s
}

fn append_side(into: &mut SideCondition, from: SideCondition) {
    match (into, from) {
        (SideCondition::StackedSum { bars, .. }, SideCondition::StackedSum { bars: more, .. }) => {
            bars.extend(more)
        }
        (
            SideCondition::LineGap { segments, .. },
            SideCondition::LineGap { segments: more, .. },
        ) => segments.extend(more),
        _ => unreachable!("unified programs have matching side conditions"),
    }
}

/// Single-layer or multi-layer readings of one subplot.
fn plot_candidates(elems: &[VisualElement]) -> Vec<PlotCand> {
    let mut by_kind: BTreeMap<ElementKind, Vec<VisualElement>> = BTreeMap::new();
    for e in elems {
        by_kind.entry(e.kind()).or_default().push(e.clone());
    }
    if by_kind.len() == 1 {
        let (kind, block) = by_kind.into_iter().next().unwrap();
        return layer_candidates(kind, &block)
            .into_iter()
            .map(|lc| PlotCand {
                plot: Plot::Single(lc.layer),
                specs: vec![lc.spec],
            })
            .collect();
    }
    let per_kind: Vec<Vec<LayerCand>> = by_kind
        .iter()
        .map(|(k, b)| layer_candidates(*k, b))
        .collect();
    if per_kind.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut combos: Vec<Vec<&LayerCand>> = vec![Vec::new()];
    for options in &per_kind {
        let mut next = Vec::new();
        for combo in &combos {
            for o in options {
                if next.len() >= MAX_PLOT_CANDIDATES {
                    break;
                }
                let mut c = combo.clone();
                c.push(o);
                next.push(c);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|combo| {
            // shift each layer's names past the previous layers'
            let mut offset = 0;
            let mut layers = Vec::new();
            let mut specs = Vec::new();
            for lc in combo {
                let top = max_layer_index(&lc.layer);
                let shift = ColumnMapping::from_pairs(
                    (1..=top).map(|i| (format!("c{i}"), format!("c{}", i + offset))),
                );
                layers.push(lc.layer.rename(&shift));
                specs.push(lc.spec.rename(&shift));
                offset += top;
            }
            PlotCand {
                plot: Plot::Multi(layers),
                specs,
            }
        })
        .collect()
}

fn max_layer_index(l: &Layer) -> usize {
    l.columns()
        .iter()
        .filter_map(|c| c.strip_prefix('c').and_then(|n| n.parse().ok()))
        .max()
        .unwrap_or(0)
}

fn max_name_index(p: &Plot) -> usize {
    p.layers().iter().map(max_layer_index).max().unwrap_or(0)
}

#[derive(Clone, Debug)]
struct LayerCand {
    layer: Layer,
    spec: SpecConstraint,
}

struct Namer(usize);

impl Namer {
    fn fresh(&mut self) -> String {
        self.0 += 1;
        format!("c{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Opt {
    Column,
    Free,
    Const(Value),
    Empty,
}

enum State {
    All,
    Equal(Value),
    Absent,
    Partial,
}

fn state(block: &[VisualElement], attr: &str) -> State {
    let vals: Vec<&Value> = block.iter().filter_map(|e| e.get(attr)).collect();
    if vals.is_empty() {
        State::Absent
    } else if vals.len() < block.len() {
        State::Partial
    } else if vals.iter().all(|v| *v == vals[0]) {
        State::Equal(vals[0].clone())
    } else {
        State::All
    }
}

fn present(block: &[VisualElement], attr: &str) -> bool {
    matches!(state(block, attr), State::All | State::Equal(_))
}

/// Positional channel: driven by a spec column, or free when the sketch
/// leaves it out everywhere.
fn positional(block: &[VisualElement], attr: &str) -> Option<Opt> {
    match state(block, attr) {
        State::All | State::Equal(_) => Some(Opt::Column),
        State::Absent => Some(Opt::Free),
        State::Partial => None,
    }
}

/// Optional channel: literal and column variants when all values agree.
fn optional(block: &[VisualElement], attr: &str) -> Option<Vec<Opt>> {
    match state(block, attr) {
        State::Equal(v) => Some(vec![Opt::Const(v), Opt::Column]),
        State::All => Some(vec![Opt::Column]),
        State::Absent => Some(vec![Opt::Empty]),
        State::Partial => None,
    }
}

fn product(lists: &[Vec<Opt>]) -> Vec<Vec<Opt>> {
    let mut out: Vec<Vec<Opt>> = vec![Vec::new()];
    for l in lists {
        out = out
            .iter()
            .flat_map(|p| {
                l.iter().map(move |o| {
                    let mut p = p.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Sets a channel; returns the fresh name when a spec column backs it.
fn bind(layer: &mut Layer, ch: &str, opt: &Opt, namer: &mut Namer) -> Option<String> {
    match opt {
        Opt::Column => {
            let n = namer.fresh();
            layer.set(ch, Channel::col(n.clone()));
            Some(n)
        }
        Opt::Free => {
            layer.set(ch, Channel::col(namer.fresh()));
            None
        }
        Opt::Const(v) => {
            layer.set(ch, Channel::Const(v.clone()));
            None
        }
        Opt::Empty => None,
    }
}

/// How a spec cell is read off a sketch element.
#[derive(Clone, Copy)]
enum Get {
    A(&'static str),
    /// Difference of two numeric attributes.
    D(&'static str, &'static str),
}

impl Get {
    fn read(self, e: &VisualElement) -> Value {
        match self {
            Get::A(a) => e.get(a).cloned().unwrap_or(Value::Null),
            Get::D(hi, lo) => match (num(e, hi), num(e, lo)) {
                (Some(h), Some(l)) => Value::num(snap(h - l)),
                _ => Value::Null,
            },
        }
    }
}

fn num(e: &VisualElement, a: &str) -> Option<f64> {
    e.get(a).and_then(Value::as_f64)
}

/// Rounds to 12 significant digits so differences of sums recover the
/// decimal the data holds (e.g. `(0.1 + 0.2) - 0.1` reads as `0.2`).
pub(crate) fn snap(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn spec_table(block: &[VisualElement], cols: &[(String, Get)]) -> Table {
    Table::new(
        cols.iter().map(|(n, _)| n.clone()).collect(),
        block
            .iter()
            .map(|e| cols.iter().map(|(_, g)| g.read(e)).collect())
            .collect(),
    )
    .expect("fresh names are distinct")
}

fn push_if(cols: &mut Vec<(String, Get)>, name: &Option<String>, g: Get) {
    if let Some(n) = name {
        cols.push((n.clone(), g));
    }
}

fn layer_candidates(kind: ElementKind, block: &[VisualElement]) -> Vec<LayerCand> {
    let mut out = Vec::new();
    match kind {
        ElementKind::Point => scatter(block, &mut out),
        ElementKind::BarV => {
            simple_bar(block, Orient::Vertical, &mut out);
            stacked_bar(block, Orient::Vertical, &mut out);
        }
        ElementKind::BarH => {
            simple_bar(block, Orient::Horizontal, &mut out);
            stacked_bar(block, Orient::Horizontal, &mut out);
        }
        ElementKind::Line => line(block, &mut out),
        ElementKind::Area => {
            for o in [Orient::Vertical, Orient::Horizontal] {
                area(block, o, &mut out);
                stacked_area(block, o, &mut out);
            }
        }
    }
    out
}

fn scatter(block: &[VisualElement], out: &mut Vec<LayerCand>) {
    let (Some(x), Some(y)) = (positional(block, "x"), positional(block, "y")) else {
        return;
    };
    if x == Opt::Free && y == Opt::Free {
        return;
    }
    let Some(opts) = ["shape", "color", "size"]
        .iter()
        .map(|a| optional(block, a))
        .collect::<Option<Vec<_>>>()
    else {
        return;
    };
    for combo in product(&opts) {
        let mut namer = Namer(0);
        let mut layer = Layer::new(LayerKind::Scatter(Mark::Point));
        let mut cols = Vec::new();
        let chans = [
            ("x", &x),
            ("y", &y),
            ("shape", &combo[0]),
            ("color", &combo[1]),
            ("size", &combo[2]),
        ];
        for (ch, opt) in chans {
            let n = bind(&mut layer, ch, opt, &mut namer);
            push_if(&mut cols, &n, Get::A(ch));
        }
        out.push(LayerCand {
            layer,
            spec: SpecConstraint {
                tables: vec![spec_table(block, &cols)],
                side: vec![],
            },
        });
    }
}

struct BarAttrs {
    pos: &'static str,
    lo: &'static str,
    hi: &'static str,
}

fn bar_attrs(o: Orient) -> BarAttrs {
    match o {
        Orient::Vertical => BarAttrs {
            pos: "x",
            lo: "y1",
            hi: "y2",
        },
        Orient::Horizontal => BarAttrs {
            pos: "y",
            lo: "x1",
            hi: "x2",
        },
    }
}

fn simple_bar(block: &[VisualElement], o: Orient, out: &mut Vec<LayerCand>) {
    let a = bar_attrs(o);
    let Some(pos) = positional(block, a.pos) else { return };
    if !present(block, a.hi) {
        return;
    }
    let Some(opts) = ["color", "width"]
        .iter()
        .map(|at| optional(block, at))
        .collect::<Option<Vec<_>>>()
    else {
        return;
    };
    // channel names of the Bar layer for (position, low end, high end)
    let (cpos, clo, chi) = match o {
        Orient::Vertical => ("x", "y", "y2"),
        Orient::Horizontal => ("y", "x", "x2"),
    };
    let lo_state = state(block, a.lo);
    let two_col = matches!(lo_state, State::All | State::Equal(_));
    let baseline = o == Orient::Vertical
        && match &lo_state {
            State::Absent => true,
            State::Equal(v) => *v == Value::num(0.0),
            _ => false,
        };
    for variant in [two_col, baseline]
        .iter()
        .enumerate()
        .filter(|(_, on)| **on)
        .map(|(i, _)| i)
    {
        for combo in product(&opts) {
            let mut namer = Namer(0);
            let mut layer = Layer::new(LayerKind::Bar);
            let mut cols = Vec::new();
            // channel order of Bar is x, x2, y, y2, color, width
            let mut slots: Vec<(&str, Opt, Get)> = if variant == 0 {
                vec![
                    (cpos, pos.clone(), Get::A(a.pos)),
                    (clo, Opt::Column, Get::A(a.lo)),
                    (chi, Opt::Column, Get::A(a.hi)),
                ]
            } else {
                vec![(cpos, pos.clone(), Get::A(a.pos)), ("y", Opt::Column, Get::A(a.hi))]
            };
            let order = LayerKind::Bar.channel_names();
            slots.sort_by_key(|(ch, _, _)| order.iter().position(|n| n == ch));
            slots.push(("color", combo[0].clone(), Get::A("color")));
            slots.push(("width", combo[1].clone(), Get::A("width")));
            for (ch, opt, g) in &slots {
                let n = bind(&mut layer, ch, opt, &mut namer);
                push_if(&mut cols, &n, *g);
            }
            out.push(LayerCand {
                layer,
                spec: SpecConstraint {
                    tables: vec![spec_table(block, &cols)],
                    side: vec![],
                },
            });
        }
    }
}

/// Whether no two elements share a value of `attr`.
fn unique_by(block: &[VisualElement], attr: &str) -> bool {
    let mut seen: Vec<&Value> = Vec::new();
    for e in block {
        let v = e.get(attr).unwrap_or(&Value::Null);
        if seen.contains(&v) {
            return false;
        }
        seen.push(v);
    }
    true
}

fn unique_by_pair(block: &[VisualElement], a: &str, b: &str) -> bool {
    let mut seen: Vec<(Option<&Value>, Option<&Value>)> = Vec::new();
    for e in block {
        let k = (e.get(a), e.get(b));
        if seen.contains(&k) {
            return false;
        }
        seen.push(k);
    }
    true
}

/// Color options for stacked layers: a column when each stack shows
/// distinct colors, otherwise a literal or nothing when stacks are single.
fn stack_color_opts(block: &[VisualElement], pos: &str) -> Vec<Opt> {
    let single = unique_by(block, pos);
    match state(block, "color") {
        State::All => {
            if unique_by_pair(block, pos, "color") {
                vec![Opt::Column]
            } else {
                vec![]
            }
        }
        State::Equal(v) => {
            let mut o = Vec::new();
            if single {
                o.push(Opt::Const(v));
                o.push(Opt::Column);
            }
            o
        }
        State::Absent if single => vec![Opt::Empty],
        _ => vec![],
    }
}

fn stacked_bar(block: &[VisualElement], o: Orient, out: &mut Vec<LayerCand>) {
    let a = bar_attrs(o);
    if ![a.pos, a.lo, a.hi].iter().all(|at| present(block, at)) {
        return;
    }
    if block.iter().any(|e| num(e, a.lo).is_none() || num(e, a.hi).is_none()) {
        return;
    }
    let Some(widths) = optional(block, "width") else { return };
    for color in stack_color_opts(block, a.pos) {
        for width in &widths {
            let mut namer = Namer(0);
            let mut layer = Layer::new(LayerKind::StackedBar(o));
            let mut cols = Vec::new();
            let nx = bind(&mut layer, "x", &Opt::Column, &mut namer);
            push_if(&mut cols, &nx, Get::A(a.pos));
            let nh = bind(&mut layer, "h", &Opt::Column, &mut namer);
            push_if(&mut cols, &nh, Get::D(a.hi, a.lo));
            let nc = bind(&mut layer, "color", &color, &mut namer);
            push_if(&mut cols, &nc, Get::A("color"));
            let nw = bind(&mut layer, "width", width, &mut namer);
            push_if(&mut cols, &nw, Get::A("width"));
            let bars = block
                .iter()
                .map(|e| StackReq {
                    x: e.get(a.pos).cloned().unwrap_or(Value::Null),
                    color: nc.as_ref().and_then(|_| e.get("color").cloned()),
                    facets: vec![],
                    base: num(e, a.lo).unwrap_or(0.0),
                })
                .collect();
            out.push(LayerCand {
                layer,
                spec: SpecConstraint {
                    tables: vec![spec_table(block, &cols)],
                    side: vec![SideCondition::StackedSum {
                        x: nx.unwrap(),
                        h: nh.unwrap(),
                        color: nc,
                        facets: vec![],
                        bars,
                    }],
                },
            });
        }
    }
}

fn line(block: &[VisualElement], out: &mut Vec<LayerCand>) {
    if !["x1", "y1", "x2", "y2"].iter().all(|a| present(block, a)) {
        return;
    }
    if block
        .iter()
        .any(|e| e.get("x1") == e.get("x2") && e.get("y1") == e.get("y2"))
    {
        return;
    }
    let Some(opts) = ["width", "color"]
        .iter()
        .map(|a| optional(block, a))
        .collect::<Option<Vec<_>>>()
    else {
        return;
    };
    for combo in product(&opts) {
        let mut namer = Namer(0);
        let mut layer = Layer::new(LayerKind::Line);
        let nx = bind(&mut layer, "x", &Opt::Column, &mut namer).unwrap();
        let ny = bind(&mut layer, "y", &Opt::Column, &mut namer).unwrap();
        let nw = bind(&mut layer, "width", &combo[0], &mut namer);
        let nc = bind(&mut layer, "color", &combo[1], &mut namer);
        let mut left = vec![(nx.clone(), Get::A("x1")), (ny.clone(), Get::A("y1"))];
        push_if(&mut left, &nw, Get::A("width"));
        push_if(&mut left, &nc, Get::A("color"));
        let mut right = vec![(nx.clone(), Get::A("x2")), (ny.clone(), Get::A("y2"))];
        push_if(&mut right, &nc, Get::A("color"));
        let mut left_key = vec![nx.clone(), ny.clone()];
        left_key.extend(nw.clone());
        let segments = block
            .iter()
            .map(|e| {
                let mut l = vec![Get::A("x1").read(e), Get::A("y1").read(e)];
                if nw.is_some() {
                    l.push(Get::A("width").read(e));
                }
                GapSeg {
                    group: nc.iter().map(|_| Get::A("color").read(e)).collect(),
                    left: l,
                    right: vec![Get::A("x2").read(e), Get::A("y2").read(e)],
                }
            })
            .collect();
        out.push(LayerCand {
            layer,
            spec: SpecConstraint {
                tables: vec![spec_table(block, &left), spec_table(block, &right)],
                side: vec![SideCondition::LineGap {
                    group: nc.into_iter().collect(),
                    left_key,
                    right_key: vec![nx, ny],
                    segments,
                }],
            },
        });
    }
}

/// Corner attributes of an area element read as (position, high, low) at
/// its start and end along the running axis.
struct AreaEnds {
    a: [&'static str; 3],
    b: [&'static str; 3],
}

fn area_ends(o: Orient) -> AreaEnds {
    match o {
        Orient::Vertical => AreaEnds {
            a: ["x_tl", "y_tl", "y_bl"],
            b: ["x_tr", "y_tr", "y_br"],
        },
        Orient::Horizontal => AreaEnds {
            a: ["y_bl", "x_br", "x_bl"],
            b: ["y_tl", "x_tr", "x_tl"],
        },
    }
}

/// Whether every element is a trapezoid along the orientation's axis with
/// a strictly increasing (position, high, low) from start to end.
fn area_shape_ok(block: &[VisualElement], o: Orient, strict_pos: bool) -> bool {
    if !crate::trace::AREA_CORNERS.iter().all(|a| present(block, a)) {
        return false;
    }
    let ends = area_ends(o);
    let (s1, s2) = match o {
        Orient::Vertical => (("x_tl", "x_bl"), ("x_tr", "x_br")),
        Orient::Horizontal => (("y_bl", "y_br"), ("y_tl", "y_tr")),
    };
    block.iter().all(|e| {
        let ka: Vec<_> = ends.a.iter().map(|a| e.get(a)).collect();
        let kb: Vec<_> = ends.b.iter().map(|a| e.get(a)).collect();
        e.get(s1.0) == e.get(s1.1)
            && e.get(s2.0) == e.get(s2.1)
            && if strict_pos { ka[0] < kb[0] } else { ka < kb }
    })
}

fn area(block: &[VisualElement], o: Orient, out: &mut Vec<LayerCand>) {
    if !area_shape_ok(block, o, false) {
        return;
    }
    let Some(colors) = optional(block, "color") else { return };
    let ends = area_ends(o);
    let zero = Value::num(0.0);
    let baseline = o == Orient::Vertical
        && block
            .iter()
            .all(|e| e.get(ends.a[2]) == Some(&zero) && e.get(ends.b[2]) == Some(&zero));
    let (cpos, chi, clo) = match o {
        Orient::Vertical => ("x", "y", "y2"),
        Orient::Horizontal => ("y", "x2", "x"),
    };
    for with_lo in [true, false] {
        if !with_lo && !baseline {
            continue;
        }
        for color in &colors {
            let mut namer = Namer(0);
            let mut layer = Layer::new(LayerKind::Area);
            let order = LayerKind::Area.channel_names();
            let mut slots: Vec<(&str, usize)> = vec![(cpos, 0), (chi, 1)];
            if with_lo {
                slots.push((clo, 2));
            }
            slots.sort_by_key(|(ch, _)| order.iter().position(|n| n == ch));
            let mut names = [None, None, None];
            for (ch, k) in &slots {
                names[*k] = bind(&mut layer, ch, &Opt::Column, &mut namer);
            }
            let nc = bind(&mut layer, "color", color, &mut namer);
            let key: Vec<String> = names.iter().flatten().cloned().collect();
            let mut left = Vec::new();
            let mut right = Vec::new();
            for k in 0..3 {
                push_if(&mut left, &names[k], Get::A(ends.a[k]));
                push_if(&mut right, &names[k], Get::A(ends.b[k]));
            }
            push_if(&mut left, &nc, Get::A("color"));
            push_if(&mut right, &nc, Get::A("color"));
            let n_key = key.len();
            let segments = block
                .iter()
                .map(|e| GapSeg {
                    group: nc.iter().map(|_| Get::A("color").read(e)).collect(),
                    left: ends.a[..n_key].iter().map(|a| Get::A(a).read(e)).collect(),
                    right: ends.b[..n_key].iter().map(|a| Get::A(a).read(e)).collect(),
                })
                .collect();
            out.push(LayerCand {
                layer,
                spec: SpecConstraint {
                    tables: vec![spec_table(block, &left), spec_table(block, &right)],
                    side: vec![SideCondition::LineGap {
                        group: nc.into_iter().collect(),
                        left_key: key.clone(),
                        right_key: key,
                        segments,
                    }],
                },
            });
        }
    }
}

fn stacked_area(block: &[VisualElement], o: Orient, out: &mut Vec<LayerCand>) {
    if !area_shape_ok(block, o, true) {
        return;
    }
    let ends = area_ends(o);
    if block
        .iter()
        .any(|e| ends.a.iter().chain(&ends.b).any(|a| num(e, a).is_none()))
    {
        return;
    }
    let colors = match state(block, "color") {
        State::All => vec![Opt::Column],
        State::Equal(v) => vec![Opt::Const(v), Opt::Column],
        State::Absent => vec![Opt::Empty],
        State::Partial => vec![],
    };
    for color in colors {
        let mut namer = Namer(0);
        let mut layer = Layer::new(LayerKind::StackedArea(o));
        let nx = bind(&mut layer, "x", &Opt::Column, &mut namer).unwrap();
        let nh = bind(&mut layer, "h", &Opt::Column, &mut namer).unwrap();
        let nc = bind(&mut layer, "color", &color, &mut namer);
        let mut left = vec![
            (nx.clone(), Get::A(ends.a[0])),
            (nh.clone(), Get::D(ends.a[1], ends.a[2])),
        ];
        let mut right = vec![
            (nx.clone(), Get::A(ends.b[0])),
            (nh.clone(), Get::D(ends.b[1], ends.b[2])),
        ];
        push_if(&mut left, &nc, Get::A("color"));
        push_if(&mut right, &nc, Get::A("color"));
        let color_of = |e: &VisualElement| nc.as_ref().and_then(|_| e.get("color").cloned());
        let mut bars = Vec::new();
        let mut segments = Vec::new();
        for e in block {
            for end in [&ends.a, &ends.b] {
                bars.push(StackReq {
                    x: Get::A(end[0]).read(e),
                    color: color_of(e),
                    facets: vec![],
                    base: num(e, end[2]).unwrap_or(0.0),
                });
            }
            segments.push(GapSeg {
                group: nc.iter().map(|_| Get::A("color").read(e)).collect(),
                left: vec![Get::A(ends.a[0]).read(e)],
                right: vec![Get::A(ends.b[0]).read(e)],
            });
        }
        out.push(LayerCand {
            layer,
            spec: SpecConstraint {
                tables: vec![spec_table(block, &left), spec_table(block, &right)],
                side: vec![
                    SideCondition::StackedSum {
                        x: nx.clone(),
                        h: nh,
                        color: nc.clone(),
                        facets: vec![],
                        bars,
                    },
                    SideCondition::LineGap {
                        group: nc.into_iter().collect(),
                        left_key: vec![nx.clone()],
                        right_key: vec![nx],
                        segments,
                    },
                ],
            },
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> VisualTrace {
        VisualTrace::parse(s).unwrap()
    }

    #[test]
    fn running_sketch_candidates() {
        let sketch = parse(
            r#"[{"kind":"point","x":1,"y":7,"color":"M"},{"kind":"point","x":2,"y":6,"color":"M"}]"#,
        );
        let cands = learn_visual_programs(&sketch);
        let shown: Vec<String> = cands.iter().map(|c| c.program.to_string()).collect();
        assert!(shown.contains(&"Scatter[point](x=c1, y=c2, color=\"M\")".to_string()), "{shown:?}");
        let col = cands
            .iter()
            .find(|c| c.program.to_string() == "Scatter[point](x=c1, y=c2, color=c3)")
            .unwrap();
        assert_eq!(col.specs[0].tables[0].columns(), ["c1", "c2", "c3"]);
        assert_eq!(col.specs[0].tables[0].rows()[0], vec![Value::from(1), 7.into(), "M".into()]);
        let mp = cands.iter().find(|c| c.program.facets.is_some()).unwrap();
        assert_eq!(mp.free_columns(0).len(), 1);
        assert!(cands.windows(2).all(|w| w[0].size() <= w[1].size()));
    }

    #[test]
    fn single_bar_simple_and_stacked() {
        let sketch = parse(r#"[{"kind":"barV","x":"Q1","y1":0,"y2":3}]"#);
        let cands = learn_visual_programs(&sketch);
        let simple = cands
            .iter()
            .find(|c| c.program.to_string() == "Bar(x=c1, y=c2, y2=c3)")
            .unwrap();
        assert_eq!(simple.specs[0].tables[0].rows()[0], vec![Value::from("Q1"), 0.into(), 3.into()]);
        let stacked = cands
            .iter()
            .find(|c| matches!(c.program.layers()[0].kind(), LayerKind::StackedBar(_)))
            .unwrap();
        assert_eq!(stacked.specs[0].tables[0].rows()[0], vec![Value::from("Q1"), 3.into()]);
        assert!(matches!(stacked.specs[0].side[0], SideCondition::StackedSum { .. }));
    }

    #[test]
    fn line_has_two_atoms() {
        let sketch = parse(r#"[{"kind":"line","x1":0,"y1":1,"x2":1,"y2":3}]"#);
        let cands = learn_visual_programs(&sketch);
        let c = cands.iter().find(|c| c.program.to_string() == "Line(x=c1, y=c2)").unwrap();
        assert_eq!(c.specs[0].tables.len(), 2);
    }

    #[test]
    fn subplots_unify() {
        let sketch = parse(
            r#"[{"kind":"point","x":1,"y":2,"col":"a"},{"kind":"point","x":2,"y":2,"col":"b"}]"#,
        );
        let cands = learn_visual_programs(&sketch);
        let c = &cands[0];
        assert_eq!(c.program.to_string(), "MultiPlot(Scatter[point](x=c1, y=c2), col=c3, row=ε)");
        let t = &c.specs[0].tables[0];
        assert_eq!(t.columns(), ["c1", "c2", "c3"]);
        assert_eq!(t.len(), 2);
        let mixed = parse(
            r#"[{"kind":"point","x":1,"y":2,"col":"a"},{"kind":"barV","x":2,"y1":0,"y2":2,"col":"b"}]"#,
        );
        assert!(learn_visual_programs(&mixed).is_empty());
    }

    #[test]
    fn multi_layer_names_are_disjoint() {
        let sketch = parse(
            r#"[{"kind":"barV","x":1,"y1":0,"y2":2},{"kind":"line","x1":1,"y1":2,"x2":2,"y2":3}]"#,
        );
        let cands = learn_visual_programs(&sketch);
        let ml = cands
            .iter()
            .find(|c| c.program.to_string() == "MultiLayer(Line(x=c1, y=c2), Bar(x=c3, y=c4))")
            .unwrap();
        assert_eq!(ml.specs[1].columns(), ["c3", "c4"]);
    }

    #[test]
    fn partial_attributes_give_nothing() {
        let sketch = parse(r#"[{"kind":"point","x":1,"y":2,"color":"a"},{"kind":"point","x":2,"y":2}]"#);
        assert!(learn_visual_programs(&sketch).is_empty());
    }

    #[test]
    fn snap_recovers_decimals() {
        assert_eq!(snap((0.1 + 0.2) - 0.1), 0.2);
        assert_eq!(snap(3.0), 3.0);
    }
}
