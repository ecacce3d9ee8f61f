//! Task files: input tables, a sketch and run options, as read by the CLI
//! and the HTTP service. Also the result document both of them write.

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::io::{read_csv_str, read_json_table, read_table_file, IngestError};
use crate::synth::{synthesize, Solution, SynthConfig};
use crate::table::Table;
use crate::trace::{TraceError, VisualTrace};

pub const ENGINE: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tables may be given by `path` (relative to the task file), as a `csv`
/// string, or inline with `columns` and `rows`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSource {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Json>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskOptions {
    /// Seconds.
    pub budget: f64,
    pub top_k: usize,
    pub max_statements: usize,
    pub seed: u64,
}

impl Default for TaskOptions {
    fn default() -> Self {
        TaskOptions {
            budget: 600.0,
            top_k: 10,
            max_statements: 4,
            seed: 0,
        }
    }
}

impl TaskOptions {
    pub fn validate(&self) -> Result<(), TaskError> {
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(TaskError::Option(format!("budget must be a nonnegative number of seconds, got {}", self.budget)));
        }
        if self.top_k == 0 {
            return Err(TaskError::Option("top_k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            budget: Duration::from_secs_f64(self.budget),
            top_k: self.top_k,
            max_statements: self.max_statements,
            ..SynthConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub tables: Vec<TableSource>,
    pub sketch: Json,
    #[serde(default)]
    pub options: TaskOptions,
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("task file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("a task needs at least one table")]
    NoTables,
    #[error("table name `{0}` is used twice")]
    DuplicateName(String),
    #[error("table `{name}`: give exactly one of `path`, `csv`, or `columns` with `rows`")]
    AmbiguousSource { name: String },
    #[error("table `{name}`: {source}")]
    Table { name: String, source: IngestError },
    #[error("sketch: {0}")]
    Sketch(#[from] TraceError),
    #[error("sketch has no elements")]
    EmptySketch,
    #[error("option: {0}")]
    Option(String),
}

/// A validated task, ready to synthesize.
#[derive(Clone, Debug)]
pub struct Task {
    pub inputs: Vec<(String, Table)>,
    pub sketch: VisualTrace,
    pub options: TaskOptions,
}

impl Task {
    pub fn load(path: &Path) -> Result<Task, TaskError> {
        let text = std::fs::read_to_string(path).map_err(|source| TaskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: TaskFile = serde_json::from_str(&text)?;
        file.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn cells(&self) -> usize {
        self.inputs.iter().map(|(_, t)| t.cells()).sum()
    }

    pub fn largest_table(&self) -> usize {
        self.inputs.iter().map(|(_, t)| t.cells()).max().unwrap_or(0)
    }

    /// Synthesizes and returns the solutions with the result document.
    pub fn run(&self, cancel: Option<Arc<AtomicBool>>) -> (Vec<Solution>, Json) {
        let cfg = SynthConfig {
            cancel,
            ..self.options.config()
        };
        let solutions = synthesize(&self.inputs, &self.sketch, &cfg);
        let doc = result_json(&self.options, &solutions);
        (solutions, doc)
    }
}

impl TaskFile {
    pub fn resolve(&self, base: &Path) -> Result<Task, TaskError> {
        let inputs = resolve_tables(&self.tables, base)?;
        let sketch = VisualTrace::from_json(&self.sketch)?;
        if sketch.is_empty() {
            return Err(TaskError::EmptySketch);
        }
        self.options.validate()?;
        Ok(Task {
            inputs,
            sketch,
            options: self.options.clone(),
        })
    }
}

pub fn resolve_tables(sources: &[TableSource], base: &Path) -> Result<Vec<(String, Table)>, TaskError> {
    if sources.is_empty() {
        return Err(TaskError::NoTables);
    }
    let mut out: Vec<(String, Table)> = Vec::new();
    for s in sources {
        if out.iter().any(|(n, _)| n == &s.name) {
            return Err(TaskError::DuplicateName(s.name.clone()));
        }
        let wrap = |source| TaskError::Table {
            name: s.name.clone(),
            source,
        };
        let t = match (&s.path, &s.csv, &s.columns, &s.rows) {
            (Some(p), None, None, None) => read_table_file(&base.join(p)).map_err(wrap)?,
            (None, Some(text), None, None) => read_csv_str(text).map_err(wrap)?,
            (None, None, Some(c), Some(r)) => {
                read_json_table(&json!({"columns": c, "rows": r})).map_err(wrap)?
            }
            _ => return Err(TaskError::AmbiguousSource { name: s.name.clone() }),
        };
        out.push((s.name.clone(), t));
    }
    Ok(out)
}

/// Inline form of a table, for writing self-contained task files.
pub fn inline_source(name: &str, t: &Table) -> TableSource {
    let j = t.to_json();
    TableSource {
        name: name.to_string(),
        columns: j.get("columns").cloned(),
        rows: j.get("rows").cloned(),
        ..TableSource::default()
    }
}

/// The result document. Carries no timings, so equal runs give equal bytes.
pub fn result_json(options: &TaskOptions, solutions: &[Solution]) -> Json {
    json!({
        "engine": ENGINE,
        "version": VERSION,
        "options": options,
        "solutions": solutions
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut j = s.to_json();
                j["rank"] = json!(i + 1);
                j
            })
            .collect::<Vec<_>>(),
    })
}
