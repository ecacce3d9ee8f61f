//! Benchmark harness: a suite is a directory of case files, each holding
//! input tables and the full target trace. Sketches are sampled from the
//! target, and a case counts as solved when some returned rendering contains
//! the whole target.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::synth::{sample_sketch, synthesize_report, Goal, Solution, SynthConfig};
use crate::table::Table;
use crate::task::{inline_source, resolve_tables, TableSource, TaskError};
use crate::trace::VisualTrace;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub tables: Vec<TableSource>,
    #[serde(default)]
    pub target: Option<Json>,
    /// The scripts the target was rendered from; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Json>,
}

#[derive(Clone, Debug)]
pub struct BenchmarkCase {
    pub name: String,
    pub inputs: Vec<(String, Table)>,
    pub target: VisualTrace,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Case { path: String, message: String },
}

impl BenchmarkCase {
    pub fn to_file(&self, description: &str, script: Option<Json>) -> CaseFile {
        CaseFile {
            name: self.name.clone(),
            description: description.to_string(),
            tables: self.inputs.iter().map(|(n, t)| inline_source(n, t)).collect(),
            target: Some(self.target.to_json()),
            script,
        }
    }
}

/// Cases sorted by file name. Cases without a target are skipped with a
/// warning.
pub fn load_suite(dir: &Path) -> Result<Vec<BenchmarkCase>, BenchError> {
    let io = |source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let bad = |message: String| BenchError::Case {
            path: p.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(&p).map_err(|source| BenchError::Io {
            path: p.display().to_string(),
            source,
        })?;
        let file: CaseFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let target = match &file.target {
            Some(t) => VisualTrace::from_json(t).map_err(|e| bad(e.to_string()))?,
            None => VisualTrace::default(),
        };
        if target.is_empty() {
            log::warn!("{}: no ground-truth trace, skipped", p.display());
            continue;
        }
        let inputs = resolve_tables(&file.tables, p.parent().unwrap_or(Path::new(".")))
            .map_err(|e: TaskError| bad(e.to_string()))?;
        out.push(BenchmarkCase {
            name: file.name,
            inputs,
            target,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Seconds; one run per case at the largest, smaller ones are read off
    /// discovery times.
    pub budgets: Vec<f64>,
    pub ns: Vec<usize>,
    pub seed: u64,
    /// End each run as soon as the target is rendered. Times stay
    /// meaningful but ranks only cover what was found up to then.
    pub stop_at_target: bool,
    pub synth: SynthConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            budgets: vec![1.0, 10.0, 60.0, 600.0],
            ns: vec![4],
            seed: 0,
            stop_at_target: false,
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub case: String,
    pub n: usize,
    pub sketch_elements: usize,
    /// 1-based rank of the first solution whose rendering contains the
    /// target, among everything found within the largest budget.
    pub rank: Option<usize>,
    /// The same rank restricted to solutions found within each budget.
    pub by_budget: Vec<(f64, Option<usize>)>,
    pub seconds_to_target: Option<f64>,
    pub seconds: f64,
    pub solutions: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub results: Vec<CaseResult>,
}

pub fn target_rank(target: &VisualTrace, ranked: &[&Solution]) -> Option<usize> {
    ranked.iter().position(|s| target.contained_in(&s.rendered)).map(|i| i + 1)
}

pub fn run_case(case: &BenchmarkCase, n: usize, cfg: &BenchConfig) -> Result<CaseResult, crate::synth::SampleError> {
    let sketch = sample_sketch(&case.target, n, cfg.seed)?;
    let max = cfg.budgets.iter().copied().fold(0.0, f64::max);
    let mut synth = SynthConfig {
        budget: Duration::from_secs_f64(max),
        ..cfg.synth.clone()
    };
    if cfg.stop_at_target {
        let target = case.target.clone();
        synth.goal = Some(Goal::new(move |s| target.contained_in(&s.rendered)));
    }
    let start = Instant::now();
    let report = synthesize_report(&case.inputs, &sketch, &synth);
    let seconds = start.elapsed().as_secs_f64();
    let all: Vec<&Solution> = report.pool.iter().collect();
    let rank = target_rank(&case.target, &all);
    let by_budget = cfg
        .budgets
        .iter()
        .map(|&b| {
            let within: Vec<&Solution> = all.iter().copied().filter(|s| s.found_after.as_secs_f64() <= b).collect();
            (b, target_rank(&case.target, &within))
        })
        .collect();
    let seconds_to_target = all
        .iter()
        .filter(|s| case.target.contained_in(&s.rendered))
        .map(|s| s.found_after.as_secs_f64())
        .reduce(f64::min);
    Ok(CaseResult {
        case: case.name.clone(),
        n,
        sketch_elements: sketch.len(),
        rank,
        by_budget,
        seconds_to_target,
        seconds,
        solutions: all.len(),
    })
}

pub fn run_suite(cases: &[BenchmarkCase], cfg: &BenchConfig) -> BenchReport {
    let mut results = Vec::new();
    for &n in &cfg.ns {
        for c in cases {
            match run_case(c, n, cfg) {
                Ok(r) => {
                    log::info!("{} n={} rank={:?} {:.2}s", r.case, n, r.rank, r.seconds);
                    results.push(r);
                }
                Err(e) => log::warn!("{}: {e}", c.name),
            }
        }
    }
    BenchReport { results }
}

impl BenchReport {
    /// Solved counts per budget, for the given sketch size.
    pub fn solved_by_budget(&self, n: usize) -> Vec<(f64, usize)> {
        let rows: Vec<&CaseResult> = self.results.iter().filter(|r| r.n == n).collect();
        let Some(first) = rows.first() else {
            return Vec::new();
        };
        first
            .by_budget
            .iter()
            .enumerate()
            .map(|(i, (b, _))| (*b, rows.iter().filter(|r| r.by_budget[i].1.is_some()).count()))
            .collect()
    }

    /// Counts of cases ranked 1, within 5, within 10, beyond 10, unsolved.
    pub fn rank_buckets(&self, n: usize) -> [usize; 5] {
        let mut b = [0; 5];
        for r in self.results.iter().filter(|r| r.n == n) {
            let i = match r.rank {
                Some(1) => 0,
                Some(2..=5) => 1,
                Some(6..=10) => 2,
                Some(_) => 3,
                None => 4,
            };
            b[i] += 1;
        }
        b
    }

    pub fn ns(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.results.iter().map(|r| r.n).collect();
        ns.dedup();
        ns
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<24} {:>3} {:>6} {:>8} {:>9}\n", "case", "n", "rank", "to-target", "total"));
        for r in &self.results {
            s.push_str(&format!(
                "{:<24} {:>3} {:>6} {:>8} {:>8.2}s\n",
                r.case,
                r.n,
                r.rank.map_or("-".into(), |k| k.to_string()),
                r.seconds_to_target.map_or("-".into(), |t| format!("{t:.2}s")),
                r.seconds
            ));
        }
        for n in self.ns() {
            s.push_str(&format!("\nn = {n}\n  budget   solved\n"));
            for (b, k) in self.solved_by_budget(n) {
                s.push_str(&format!("  {b:>6}s  {k:>6}\n"));
            }
            let [t1, t5, t10, more, none] = self.rank_buckets(n);
            s.push_str(&format!(
                "  top-1 {t1}  top-5 {}  top-10 {}  >10 {more}  unsolved {none}\n",
                t1 + t5,
                t1 + t5 + t10
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{ElementKind, VisualElement};
    use crate::value::Value;

    fn case() -> BenchmarkCase {
        let t = Table::from_rows(
            &["a", "b"],
            [vec![Value::from(1), 5.into()], vec![2.into(), 3.into()], vec![3.into(), 9.into()]],
        )
        .unwrap();
        let target = t
            .rows()
            .iter()
            .map(|r| VisualElement::new(ElementKind::Point).with("x", r[0].clone()).with("y", r[1].clone()))
            .collect();
        BenchmarkCase {
            name: "scatter".into(),
            inputs: vec![("T".into(), t)],
            target,
        }
    }

    fn cfg(budgets: Vec<f64>) -> BenchConfig {
        BenchConfig {
            budgets,
            ns: vec![2],
            seed: 3,
            stop_at_target: false,
            synth: SynthConfig {
                max_statements: 1,
                ..SynthConfig::default()
            },
        }
    }

    #[test]
    fn identity_case_solved() {
        let r = run_case(&case(), 2, &cfg(vec![30.0])).unwrap();
        assert_eq!(r.sketch_elements, 2);
        assert!(r.rank.is_some());
        assert_eq!(r.by_budget[0].1, r.rank);
    }

    #[test]
    fn zero_budget_solves_nothing() {
        let rep = run_suite(&[case()], &cfg(vec![0.0]));
        assert_eq!(rep.results[0].rank, None);
        assert_eq!(rep.solved_by_budget(2), vec![(0.0, 0)]);
        assert_eq!(rep.rank_buckets(2), [0, 0, 0, 0, 1]);
    }

    #[test]
    fn suite_round_trip_skips_missing_target() {
        let dir = tempfile::tempdir().unwrap();
        let c = case();
        let f = c.to_file("", None);
        std::fs::write(dir.path().join("a.json"), serde_json::to_string(&f).unwrap()).unwrap();
        let mut g = f.clone();
        g.target = None;
        std::fs::write(dir.path().join("b.json"), serde_json::to_string(&g).unwrap()).unwrap();
        let cases = load_suite(dir.path()).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].target, c.target);
        assert_eq!(cases[0].inputs, c.inputs);
    }
}
