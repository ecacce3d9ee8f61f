//! End-to-end synthesis: visual candidates first, then one table search per
//! layer, then rendering to confirm the sketch is reproduced.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dsl::{Expr, TableProgram};
use crate::search::{Op, SearchLimits, SearchStats, TableSearch, TableSolution};
use crate::table::{ColumnMapping, Table};
use crate::trace::VisualTrace;
use crate::viz::VizProgram;
use crate::viz_synth::{learn_visual_programs, VizCandidate};

/// Table solutions combined per layer of a multi-layer candidate.
const PER_LAYER: usize = 3;
/// Concrete columns tried for each free channel.
const FREE_BINDINGS: usize = 12;

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub budget: Duration,
    pub top_k: usize,
    pub max_statements: usize,
    pub operators: Vec<Op>,
    pub prune: bool,
    pub threads: usize,
    /// Node cap per table search; keeps results independent of timing.
    pub max_nodes: Option<u64>,
    pub max_constants: usize,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Stop everything once a solution satisfies this.
    pub goal: Option<Goal>,
}

#[derive(Clone)]
pub struct Goal(pub Arc<dyn Fn(&Solution) -> bool + Send + Sync>);

impl Goal {
    pub fn new(f: impl Fn(&Solution) -> bool + Send + Sync + 'static) -> Goal {
        Goal(Arc::new(f))
    }
}

impl std::fmt::Debug for Goal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Goal(..)")
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            budget: Duration::from_secs(600),
            top_k: 10,
            max_statements: 4,
            operators: Op::ALL.to_vec(),
            prune: true,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_nodes: Some(200_000),
            max_constants: 64,
            cancel: None,
            goal: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Over concrete column names.
    pub viz: VizProgram,
    /// One per layer, or a single program shared by every layer.
    pub tables: Vec<TableProgram>,
    pub outputs: Vec<Table>,
    pub rendered: VisualTrace,
    pub size: usize,
    pub candidate: usize,
    pub completion: usize,
    pub found_after: Duration,
}

impl Solution {
    pub fn layer_count(&self) -> usize {
        self.viz.layer_count()
    }

    /// Deterministic summary: no timings.
    pub fn to_json(&self) -> Json {
        let outputs: Vec<&Table> = self.outputs.iter().collect();
        json!({
            "size": self.size,
            "visual_program": self.viz.to_string(),
            "table_programs": self.tables.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "candidate": self.candidate,
            "completion": self.completion,
            "rendered": self.rendered.to_json(),
            "vegalite": crate::vegalite::export(&self.viz, &outputs).unwrap_or(Json::Null),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct SynthReport {
    /// The first `top_k` of `pool`.
    pub solutions: Vec<Solution>,
    /// Every verified solution found, ranked. Each visual candidate adds at
    /// most `top_k` distinct renderings.
    pub pool: Vec<Solution>,
    pub candidates: usize,
    pub stats: SearchStats,
    pub elapsed: Duration,
    pub timed_out: bool,
}

/// Ranked, deduplicated solutions; empty when nothing fits.
pub fn synthesize(inputs: &[(String, Table)], sketch: &VisualTrace, cfg: &SynthConfig) -> Vec<Solution> {
    synthesize_report(inputs, sketch, cfg).solutions
}

pub fn synthesize_report(inputs: &[(String, Table)], sketch: &VisualTrace, cfg: &SynthConfig) -> SynthReport {
    let start = Instant::now();
    let deadline = start + cfg.budget;
    let candidates = learn_visual_programs(sketch);
    let next = AtomicUsize::new(0);
    let found: Mutex<Vec<Solution>> = Mutex::new(Vec::new());
    let stats: Mutex<SearchStats> = Mutex::new(SearchStats::default());
    let threads = cfg.threads.max(1).min(candidates.len().max(1));
    let stop = Arc::new(AtomicBool::new(false));
    let done = AtomicBool::new(false);
    std::thread::scope(|s| {
        if let Some(outer) = &cfg.cancel {
            s.spawn(|| {
                while !done.load(Ordering::Relaxed) {
                    if outer.load(Ordering::Relaxed) {
                        log::info!("synthesis cancelled");
                        stop.store(true, Ordering::Relaxed);
                        break;
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
            });
        }
        let mut workers = Vec::new();
        for _ in 0..threads {
            workers.push(s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= candidates.len() || Instant::now() >= deadline || stop.load(Ordering::Relaxed) {
                    break;
                }
                let mut w = Worker {
                    inputs,
                    sketch,
                    cfg,
                    deadline,
                    start,
                    stop: &stop,
                    stats: SearchStats::default(),
                };
                let sols = w.candidate(i, &candidates[i]);
                found.lock().expect("collector").extend(sols);
                add_stats(&mut stats.lock().expect("stats"), &w.stats);
            }));
        }
        for w in workers {
            let _ = w.join();
        }
        done.store(true, Ordering::Relaxed);
    });
    let pool = rank(found.into_inner().expect("collector"));
    SynthReport {
        solutions: pool.iter().take(cfg.top_k).cloned().collect(),
        pool,
        candidates: candidates.len(),
        stats: stats.into_inner().expect("stats"),
        elapsed: start.elapsed(),
        timed_out: Instant::now() >= deadline,
    }
}

fn add_stats(into: &mut SearchStats, s: &SearchStats) {
    into.sketches += s.sketches;
    into.nodes += s.nodes;
    into.pruned += s.pruned;
    into.completions += s.completions;
    into.ground_checks += s.ground_checks;
}

/// Smallest first; ties go to fewer layers, then discovery order. Equal
/// renderings keep only their best entry.
pub fn rank(mut sols: Vec<Solution>) -> Vec<Solution> {
    sols.sort_by_key(|s| (s.size, s.layer_count(), s.candidate, s.completion));
    let mut seen = HashSet::new();
    sols.retain(|s| seen.insert(s.rendered.serialize_text()));
    sols
}

struct Worker<'a> {
    inputs: &'a [(String, Table)],
    sketch: &'a VisualTrace,
    cfg: &'a SynthConfig,
    deadline: Instant,
    start: Instant,
    stop: &'a Arc<AtomicBool>,
    stats: SearchStats,
}

/// A table solution for one layer with its free channels bound.
#[derive(Clone)]
struct Bound {
    program: TableProgram,
    sigma: ColumnMapping,
    output: Table,
}

impl Worker<'_> {
    fn limits(&self, pinned: ColumnMapping) -> SearchLimits {
        SearchLimits {
            max_statements: self.cfg.max_statements,
            operators: self.cfg.operators.clone(),
            max_constants: self.cfg.max_constants,
            deadline: Some(self.deadline),
            prune: self.cfg.prune,
            max_nodes: self.cfg.max_nodes,
            cancel: Some(self.stop.clone()),
            pinned,
        }
    }

    fn candidate(&mut self, idx: usize, cand: &VizCandidate) -> Vec<Solution> {
        let mut out = Vec::new();
        let mut renders = HashSet::new();
        let raw_cap = 8 * self.cfg.top_k.max(1);
        if cand.program.layer_count() == 1 {
            let mut search = TableSearch::new(self.inputs, &cand.specs[0], self.limits(ColumnMapping::default()));
            for ts in search.by_ref().take(raw_cap) {
                for b in self.bind(cand, 0, &ts) {
                    self.emit(idx, cand, &[b], &mut out, &mut renders);
                }
                if renders.len() >= self.cfg.top_k || self.stopped() {
                    break;
                }
            }
            add_stats(&mut self.stats, &search.stats());
        } else {
            let mut chosen = Vec::new();
            self.layers(idx, cand, 0, ColumnMapping::default(), &mut chosen, &mut out, &mut renders);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn layers(
        &mut self,
        idx: usize,
        cand: &VizCandidate,
        layer: usize,
        pinned: ColumnMapping,
        chosen: &mut Vec<Bound>,
        out: &mut Vec<Solution>,
        renders: &mut HashSet<String>,
    ) {
        if layer == cand.program.layer_count() {
            self.emit(idx, cand, chosen, out, renders);
            return;
        }
        let mut search = TableSearch::new(self.inputs, &cand.specs[layer], self.limits(pinned.clone()));
        let options: Vec<TableSolution> = search.by_ref().take(PER_LAYER).collect();
        add_stats(&mut self.stats, &search.stats());
        for ts in options {
            for b in self.bind(cand, layer, &ts).into_iter().take(PER_LAYER) {
                let mut pins = pinned.clone();
                for f in cand.facet_columns() {
                    if let Some(c) = b.sigma.get(&f) {
                        pins.insert(f.clone(), c.to_string());
                    }
                }
                chosen.push(b);
                self.layers(idx, cand, layer + 1, pins, chosen, out, renders);
                chosen.pop();
                if renders.len() >= self.cfg.top_k || Instant::now() >= self.deadline || self.stopped() {
                    return;
                }
            }
        }
    }

    /// Every way of pointing the layer's unconstrained channels at a column
    /// of the table the program computes before its final select.
    fn bind(&self, cand: &VizCandidate, layer: usize, ts: &TableSolution) -> Vec<Bound> {
        let free = cand.free_columns(layer);
        let base = Bound {
            program: ts.program.clone(),
            sigma: ts.sigma.clone(),
            output: ts.output.clone(),
        };
        if free.is_empty() {
            return vec![base];
        }
        let inputs: Vec<&Table> = self.inputs.iter().map(|(_, t)| t).collect();
        let Some(before) = pre_select_columns(&ts.program, &inputs) else {
            return Vec::new();
        };
        let mut acc = vec![base];
        for f in free {
            let mut next = Vec::new();
            for b in &acc {
                for c in before.iter().take(FREE_BINDINGS) {
                    let mut p = b.program.clone();
                    if let Some(Expr::Select { cols, .. }) = p.stmts.last_mut() {
                        if !cols.contains(c) {
                            cols.push(c.clone());
                        }
                    }
                    let Ok(output) = p.eval(&inputs) else { continue };
                    let mut sigma = b.sigma.clone();
                    sigma.insert(f.clone(), c.clone());
                    next.push(Bound {
                        program: p,
                        sigma,
                        output,
                    });
                }
            }
            acc = next;
        }
        acc
    }

    fn emit(
        &mut self,
        idx: usize,
        cand: &VizCandidate,
        layers: &[Bound],
        out: &mut Vec<Solution>,
        renders: &mut HashSet<String>,
    ) {
        let mut sigma = ColumnMapping::default();
        for b in layers {
            for (a, c) in b.sigma.pairs() {
                sigma.insert(a.clone(), c.clone());
            }
        }
        let viz = cand.program.rename(&sigma);
        let tables: Vec<&Table> = layers.iter().map(|b| &b.output).collect();
        let rendered = match viz.render(&tables) {
            Ok(r) => r,
            Err(e) => {
                log::debug!("candidate {idx} does not render: {e}");
                return;
            }
        };
        if !self.sketch.contained_in(&rendered) {
            log::warn!("candidate {idx}: rendering misses sketch elements; dropped");
            return;
        }
        if !renders.insert(rendered.serialize_text()) {
            return;
        }
        let programs: Vec<TableProgram> = layers.iter().map(|b| b.program.clone()).collect();
        let size = viz.size() + programs.iter().map(TableProgram::size).sum::<usize>();
        let sol = Solution {
            viz,
            tables: programs,
            outputs: layers.iter().map(|b| b.output.clone()).collect(),
            rendered,
            size,
            candidate: idx,
            completion: out.len(),
            found_after: self.start.elapsed(),
        };
        if self.cfg.goal.as_ref().is_some_and(|g| (g.0)(&sol)) {
            self.stop.store(true, Ordering::Relaxed);
        }
        out.push(sol);
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }
}

fn pre_select_columns(p: &TableProgram, inputs: &[&Table]) -> Option<Vec<String>> {
    let n = p.stmts.len();
    if n >= 2 {
        let vals = p.eval_all(inputs).ok()?;
        return Some(vals[n - 2].columns().to_vec());
    }
    match p.stmts.first()? {
        Expr::Select { src, .. } => match src {
            crate::dsl::Source::Input(i) => inputs.get(*i).map(|t| t.columns().to_vec()),
            crate::dsl::Source::Var(_) => None,
        },
        _ => None,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("cannot sample from an empty trace")]
    Empty,
}

/// Up to `n` elements drawn uniformly without replacement from each
/// element-type block; the same seed gives the same sketch.
pub fn sample_sketch(full: &VisualTrace, n: usize, seed: u64) -> Result<VisualTrace, SampleError> {
    if full.is_empty() {
        return Err(SampleError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (_, block) in full.partition_by_type() {
        let els = block.elements();
        let mut idx = rand::seq::index::sample(&mut rng, els.len(), n.min(els.len())).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| els[i].clone()));
    }
    Ok(VisualTrace::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{ElementKind, VisualElement};
    use crate::value::Value;

    fn trace(n: usize) -> VisualTrace {
        (0..n)
            .map(|i| VisualElement::new(ElementKind::Point).with("x", i as f64).with("y", 1.0))
            .chain((0..2).map(|i| {
                VisualElement::new(ElementKind::BarV)
                    .with("x", i as f64)
                    .with("y1", 0.0)
                    .with("y2", 3.0)
            }))
            .collect()
    }

    #[test]
    fn sampling_is_per_block_and_replayable() {
        let t = trace(10);
        let s = sample_sketch(&t, 4, 7).unwrap();
        assert_eq!(s.len(), 4 + 2);
        assert!(s.contained_in(&t));
        assert_eq!(s, sample_sketch(&t, 4, 7).unwrap());
        assert_eq!(sample_sketch(&t, 99, 1).unwrap(), t);
        assert_eq!(sample_sketch(&VisualTrace::default(), 2, 0), Err(SampleError::Empty));
    }

    #[test]
    fn identity_ranked_first_for_full_rendering() {
        let t = Table::from_rows(
            &["a", "b"],
            [vec![Value::from(1), 5.into()], vec![2.into(), 3.into()], vec![3.into(), 9.into()]],
        )
        .unwrap();
        let sketch: VisualTrace = t
            .rows()
            .iter()
            .map(|r| VisualElement::new(ElementKind::Point).with("x", r[0].clone()).with("y", r[1].clone()))
            .collect();
        let cfg = SynthConfig {
            budget: Duration::from_secs(20),
            top_k: 3,
            max_statements: 2,
            ..SynthConfig::default()
        };
        let sols = synthesize(&[("T".into(), t)], &sketch, &cfg);
        assert!(!sols.is_empty());
        assert_eq!(sols[0].viz.to_string(), "Scatter[point](x=a, y=b)");
        assert_eq!(sols[0].tables[0].to_string(), "t1 = select(T, a, b)");
        assert!(sols.windows(2).all(|w| w[0].size <= w[1].size));
    }
}
