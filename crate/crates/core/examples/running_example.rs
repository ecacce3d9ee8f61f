//! Two input tables and a two-point sketch; prints the ranked scripts.
//!
//!     cargo run --release --example running_example

use std::time::Instant;

use sketchviz::synth::{synthesize_report, Solution, SynthConfig};
use sketchviz::{ElementKind, Table, Value, VisualElement, VisualTrace};

fn main() {
    let t1 = Table::from_rows(
        &["ID", "Cond", "A", "Aneg"],
        [
            vec![Value::from(1), 1.into(), 3.into(), 4.into()],
            vec![2.into(), 2.into(), 2.into(), 4.into()],
            vec![3.into(), 1.into(), 1.into(), 1.into()],
            vec![4.into(), 2.into(), 5.into(), 2.into()],
        ],
    )
    .unwrap();
    let t2 = Table::from_rows(
        &["ID", "Gender"],
        [
            vec![Value::from(1), "M".into()],
            vec![2.into(), "M".into()],
            vec![3.into(), "F".into()],
            vec![4.into(), "F".into()],
        ],
    )
    .unwrap();
    let sketch: VisualTrace = [(1, 7), (2, 6)]
        .into_iter()
        .map(|(x, y)| VisualElement::new(ElementKind::Point).with("x", x).with("y", y).with("color", "M"))
        .collect();

    let start = Instant::now();
    let report = synthesize_report(&[("T1".into(), t1), ("T2".into(), t2)], &sketch, &SynthConfig::default());
    println!(
        "{} verified solutions from {} visual candidates in {:.2?}\n",
        report.pool.len(),
        report.candidates,
        start.elapsed()
    );
    for (i, s) in report.solutions.iter().enumerate().take(5) {
        show(i, s);
    }
    // two points also fit smaller constant-offset programs such as ID+4, so
    // the reading that colors by a column sits further down
    let intended = report.pool.iter().position(|s| {
        let p = s.tables[0].to_string();
        s.viz.to_string().contains("color=Gender") && p.contains("join(") && p.contains("A + Aneg")
    });
    match intended {
        Some(i) => show(i, &report.pool[i]),
        None => println!("no join + mutate solution colored by Gender"),
    }
}

fn show(i: usize, s: &Solution) {
    println!("#{} size {}  {}", i + 1, s.size, s.viz);
    for p in &s.tables {
        for line in p.to_string().lines() {
            println!("    {line}");
        }
    }
    println!();
}
