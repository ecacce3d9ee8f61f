//! Samples partial sketches from a full target trace, the way the benchmark
//! harness does, and lists the visual programs each sketch admits.
//!
//!     cargo run --example sketch_sampling

use sketchviz::io::read_csv_str;
use sketchviz::synth::sample_sketch;
use sketchviz::viz_synth::learn_visual_programs;
use sketchviz::{Channel, Layer, LayerKind, Mark, VizProgram};

fn main() {
    let t = read_csv_str("day,temp,city\n1,12,Oslo\n2,14,Oslo\n3,11,Oslo\n1,25,Rome\n2,27,Rome\n3,26,Rome\n").unwrap();
    let prog = VizProgram::layer(
        Layer::new(LayerKind::Scatter(Mark::Point))
            .with("x", Channel::col("day"))
            .with("y", Channel::col("temp"))
            .with("color", Channel::col("city")),
    );
    let full = prog.render(&[&t]).unwrap();
    println!("target: {} elements\n", full.len());

    for seed in 0..3 {
        let sketch = sample_sketch(&full, 2, seed).unwrap();
        println!("seed {seed}: {}", sketch.serialize_text());
        for c in learn_visual_programs(&sketch).iter().take(4) {
            println!("    size {:2}  {}", c.size(), c.program);
        }
    }
}
