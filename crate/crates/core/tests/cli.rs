use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchviz"))
}

fn running_example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../suite/tasks/running_example.json")
}

fn synth(task: &Path, extra: &[&str]) -> Output {
    bin().arg("synth").arg(task).args(extra).output().unwrap()
}

fn write_task(dir: &Path, sketch: &str, csv: &str) -> PathBuf {
    std::fs::write(dir.join("t.csv"), csv).unwrap();
    let p = dir.join("task.json");
    std::fs::write(
        &p,
        format!(r#"{{"tables": [{{"name": "T", "path": "t.csv"}}], "sketch": {sketch}, "options": {{"budget": 5}}}}"#),
    )
    .unwrap();
    p
}

#[test]
fn running_example_succeeds() {
    let out = synth(&running_example(), &["--budget", "20", "--top-k", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sols = doc["solutions"].as_array().unwrap();
    assert!(!sols.is_empty() && sols.len() <= 3);
}

#[test]
fn out_flag_writes_the_same_document() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    let a = synth(&running_example(), &["--budget", "20", "--out", file.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout.is_empty());
    let b = synth(&running_example(), &["--budget", "20"]);
    assert_eq!(std::fs::read(&file).unwrap(), b.stdout);
}

#[test]
fn csv_path_relative_to_task() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_task(dir.path(), r#"[{"kind": "point", "x": 1, "y": 2}]"#, "a,b\n1,2\n3,4\n");
    let out = synth(&p, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_sketch_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_task(dir.path(), "[]", "a,b\n1,2\n");
    let out = synth(&p, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no elements"));
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_task(dir.path(), r#"[{"kind": "point", "x": 1, "y": 2}]"#, "a,b\n1,2\n3\n");
    let out = synth(&p, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_task_file() {
    let out = synth(Path::new("/nonexistent/task.json"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_budget_finds_nothing() {
    let out = synth(&running_example(), &["--budget", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["solutions"].as_array().unwrap().is_empty());
}

#[test]
fn bad_option_values() {
    assert_eq!(synth(&running_example(), &["--top-k", "0"]).status.code(), Some(1));
    assert_eq!(synth(&running_example(), &["--budget=-1"]).status.code(), Some(1));
}

#[test]
fn bench_rejects_bad_n() {
    let out = bin().args(["bench", "x", "--n", "0"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bench_on_a_tiny_suite() {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../suite/mini/01_bar_count.json");
    std::fs::copy(src, dir.path().join("01.json")).unwrap();
    let json = dir.path().join("report.json");
    let out = bin()
        .args(["bench", dir.path().to_str().unwrap(), "--budgets", "5", "--n", "2,all", "--json"])
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all"), "{text}");
    let _: serde_json::Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
}
