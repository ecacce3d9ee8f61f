//! Renders a stacked bar chart to its visual trace, then exports the same
//! program as Vega-Lite.
//!
//!     cargo run --example stacked_bar

use sketchviz::io::read_csv_str;
use sketchviz::vegalite::export;
use sketchviz::{Channel, Layer, LayerKind, Orient, VizProgram};

fn main() {
    let t = read_csv_str("quarter,product,units\nQ1,A,10\nQ1,B,4\nQ2,A,7\nQ2,B,9\nQ3,A,3\n").unwrap();
    let layer = Layer::new(LayerKind::StackedBar(Orient::Vertical))
        .with("x", Channel::col("quarter"))
        .with("h", Channel::col("units"))
        .with("color", Channel::col("product"));
    let prog = VizProgram::layer(layer);
    println!("{prog}  (size {})\n", prog.size());

    // each bar starts where the one below it ends
    let trace = prog.render(&[&t]).unwrap();
    for e in trace.sorted() {
        let attrs: Vec<String> = e.attrs().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{} {}", e.kind().name(), attrs.join(" "));
    }

    let vl = export(&prog, &[&t]).unwrap();
    println!("\n{}", serde_json::to_string_pretty(&vl).unwrap());
}
