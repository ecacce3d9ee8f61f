//! Sketch matching: omitted attributes are wildcards and repeated elements
//! must be matched by distinct rendered elements.
//!
//!     cargo run --example trace_containment

use sketchviz::VisualTrace;

fn main() {
    let rendered = VisualTrace::parse(
        r#"[{"kind": "barV", "x": "Q1", "y1": 0, "y2": 10, "color": "A"},
            {"kind": "barV", "x": "Q1", "y1": 10, "y2": 14, "color": "B"},
            {"kind": "barV", "x": "Q2", "y1": 0, "y2": 7, "color": "A"}]"#,
    )
    .unwrap();

    let cases = [
        ("exact bar", r#"[{"kind": "barV", "x": "Q1", "y1": 0, "y2": 10, "color": "A"}]"#),
        ("color left out", r#"[{"kind": "barV", "x": "Q2", "y1": 0, "y2": 7}]"#),
        ("endpoints swapped", r#"[{"kind": "barV", "x": "Q1", "y1": 14, "y2": 10}]"#),
        ("one bar twice", r#"[{"kind": "barV", "x": "Q2", "y2": 7}, {"kind": "barV", "x": "Q2", "y2": 7}]"#),
        ("wrong height", r#"[{"kind": "barV", "x": "Q2", "y1": 0, "y2": 8}]"#),
    ];
    for (name, sketch) in cases {
        let s = VisualTrace::parse(sketch).unwrap();
        println!("{name:18} {}", if s.contained_in(&rendered) { "contained" } else { "not contained" });
    }
}
