//! Vega-Lite v5 export.

use serde_json::{json, Map, Value as Json};

use crate::table::Table;
use crate::value::Value;
use crate::viz::{Channel, Layer, LayerKind, Mark, Orient, RenderError, VizProgram};

const SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";
const LAYER_FIELD: &str = "__layer";

/// Builds a Vega-Lite spec with inlined data. The program must render on
/// the same tables; render errors are reported rather than emitting a spec
/// for a chart that cannot exist.
pub fn export(p: &VizProgram, tables: &[&Table]) -> Result<Json, RenderError> {
    p.render(tables)?;
    let table_for = |i: usize| if tables.len() == 1 { tables[0] } else { tables[i] };
    let layers = p.layers();
    let mut spec = Map::new();
    spec.insert("$schema".into(), SCHEMA.into());

    match &p.facets {
        None => {
            if layers.len() == 1 {
                spec.insert("data".into(), json!({"values": table_for(0).to_records()}));
                merge(&mut spec, layer_spec(&layers[0], table_for(0)));
            } else {
                let ls: Vec<Json> = layers
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let mut m = Map::new();
                        m.insert("data".into(), json!({"values": table_for(i).to_records()}));
                        merge(&mut m, layer_spec(l, table_for(i)));
                        Json::Object(m)
                    })
                    .collect();
                spec.insert("layer".into(), Json::Array(ls));
            }
        }
        Some((c, r)) => {
            // facets need a single data source, so layers are tagged and
            // filtered back apart
            let shared = tables.len() == 1 || layers.len() == 1;
            let mut values = Vec::new();
            for i in 0..if shared { 1 } else { layers.len() } {
                for rec in records(table_for(i)) {
                    let mut rec = rec;
                    if !shared {
                        rec.insert(LAYER_FIELD.into(), json!(i));
                    }
                    values.push(Json::Object(rec));
                }
            }
            spec.insert("data".into(), json!({"values": values}));
            let mut facet = Map::new();
            let t0 = table_for(0);
            if let Some(col) = c.column() {
                facet.insert("column".into(), field(col, t0));
            }
            if let Some(row) = r.column() {
                facet.insert("row".into(), field(row, t0));
            }
            spec.insert("facet".into(), Json::Object(facet));
            let inner = if layers.len() == 1 {
                Json::Object(layer_spec(&layers[0], t0))
            } else {
                let ls: Vec<Json> = layers
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let mut m = layer_spec(l, table_for(i));
                        if !shared {
                            m.insert(
                                "transform".into(),
                                json!([{"filter": format!("datum.{LAYER_FIELD} == {i}")}]),
                            );
                        }
                        Json::Object(m)
                    })
                    .collect();
                json!({ "layer": ls })
            };
            spec.insert("spec".into(), inner);
        }
    }
    Ok(Json::Object(spec))
}

fn records(t: &Table) -> Vec<Map<String, Json>> {
    match t.to_records() {
        Json::Array(rs) => rs
            .into_iter()
            .filter_map(|r| match r {
                Json::Object(m) => Some(m),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn merge(into: &mut Map<String, Json>, from: Map<String, Json>) {
    for (k, v) in from {
        into.insert(k, v);
    }
}

fn layer_spec(l: &Layer, t: &Table) -> Map<String, Json> {
    let mut enc = Map::new();
    let mark: Json;
    match l.kind() {
        LayerKind::Scatter(m) => {
            put(&mut enc, t, "x", l.ch("x"), true);
            put(&mut enc, t, "y", l.ch("y"), true);
            put(&mut enc, t, "color", l.ch("color"), false);
            put(&mut enc, t, "size", l.ch("size"), false);
            if m == Mark::Text {
                put(&mut enc, t, "text", l.ch("shape"), false);
            } else {
                put(&mut enc, t, "shape", l.ch("shape"), false);
            }
            mark = json!(match m {
                Mark::Point => "point",
                Mark::Circle => "circle",
                Mark::Text => "text",
                Mark::Rect => "rect",
                Mark::Tick => "tick",
            });
        }
        LayerKind::Line => {
            put(&mut enc, t, "x", l.ch("x"), true);
            put(&mut enc, t, "y", l.ch("y"), true);
            put(&mut enc, t, "color", l.ch("color"), false);
            put(&mut enc, t, "strokeWidth", l.ch("width"), false);
            put(&mut enc, t, "order", l.ch("order"), false);
            mark = json!("line");
        }
        LayerKind::Bar | LayerKind::Area => {
            let horizontal = !l.ch("x2").is_empty() && l.ch("y2").is_empty();
            put(&mut enc, t, "x", l.ch("x"), true);
            put(&mut enc, t, "y", l.ch("y"), true);
            put(&mut enc, t, "x2", l.ch("x2"), true);
            put(&mut enc, t, "y2", l.ch("y2"), true);
            put(&mut enc, t, "color", l.ch("color"), false);
            let name = if l.kind() == LayerKind::Bar { "bar" } else { "area" };
            if l.kind() == LayerKind::Bar {
                put(&mut enc, t, "size", l.ch("width"), false);
            }
            mark = if horizontal {
                json!({"type": name, "orient": "horizontal"})
            } else {
                json!(name)
            };
        }
        LayerKind::StackedBar(o) | LayerKind::StackedArea(o) => {
            let (pos, len) = match o {
                Orient::Vertical => ("x", "y"),
                Orient::Horizontal => ("y", "x"),
            };
            put(&mut enc, t, pos, l.ch("x"), true);
            if let Some(Json::Object(mut e)) = encode(l.ch("h"), t, true) {
                e.insert("stack".into(), json!("zero"));
                enc.insert(len.to_string(), Json::Object(e));
            }
            put(&mut enc, t, "color", l.ch("color"), false);
            if let Some(c) = l.ch("color").column() {
                enc.insert("order".into(), json!({"field": c, "sort": "ascending"}));
            }
            let name = if matches!(l.kind(), LayerKind::StackedBar(_)) {
                if let Some(e) = encode(l.ch("width"), t, false) {
                    enc.insert("size".into(), e);
                }
                "bar"
            } else {
                "area"
            };
            mark = match o {
                Orient::Vertical => json!(name),
                Orient::Horizontal => json!({"type": name, "orient": "horizontal"}),
            };
        }
    }
    let mut m = Map::new();
    m.insert("mark".into(), mark);
    m.insert("encoding".into(), Json::Object(enc));
    m
}

fn put(enc: &mut Map<String, Json>, t: &Table, key: &str, ch: &Channel, positional: bool) {
    if let Some(e) = encode(ch, t, positional) {
        enc.insert(key.to_string(), e);
    }
}

fn encode(ch: &Channel, t: &Table, positional: bool) -> Option<Json> {
    match ch {
        Channel::Empty => None,
        Channel::Column(c) => Some(field(c, t)),
        Channel::Const(v) if positional => Some(json!({"datum": v.to_json()})),
        Channel::Const(v) => Some(json!({"value": v.to_json()})),
    }
}

fn field(name: &str, t: &Table) -> Json {
    json!({"field": name, "type": measure_type(name, t)})
}

fn measure_type(name: &str, t: &Table) -> &'static str {
    let Some(i) = t.column_index(name) else {
        return "nominal";
    };
    let vals: Vec<&Value> = t.column_values(i).filter(|v| !v.is_null()).collect();
    let all = |pred: fn(&Value) -> bool| !vals.is_empty() && vals.iter().all(|v| pred(v));
    if all(|v| matches!(v, Value::Num(_))) {
        "quantitative"
    } else if all(|v| matches!(v, Value::DateTime(_))) {
        "temporal"
    } else {
        "nominal"
    }
}
