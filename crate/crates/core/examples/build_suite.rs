//! Writes the bundled mini-suite as case files.
//!
//!     cargo run --example build_suite [-- OUT_DIR]

use std::path::PathBuf;

use sketchviz::suite::mini_suite;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suite/mini"));
    std::fs::create_dir_all(&out).expect("create suite dir");
    for c in mini_suite() {
        let file = c.to_file().unwrap_or_else(|e| panic!("{e}"));
        let path = out.join(format!("{}.json", c.name));
        let text = serde_json::to_string_pretty(&file).expect("serialize");
        std::fs::write(&path, text + "\n").expect("write case");
        println!("{}  {} target elements", path.display(), c.render().unwrap().len());
    }
}
