//! Table program search. Sketches (operator sequences) are filled hole by
//! hole, depth first; partial programs are dropped when the inclusion
//! bounds derived forwards from the input and backwards from the spec
//! contradict each other.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraint::{check_sat, Atom, Rel, Sat, SatCache, SpecConstraint, GROUND_CHECK_CELL_CAP};
use crate::dsl::{separate_names, Agg, ArithOp, CmpOp, Expr, Operand, Pred, Source, TableProgram};
use crate::table::{cross_columns, ColumnMapping, Table};
use crate::value::Value;

/// Cap on the values of a single subset-valued hole.
const SUBSET_CAP: usize = 4096;
/// Cap on the partial mappings tracked per search node.
const SIGMA_CAP: usize = 20_000;
/// Mappings tried per complete program.
const FINAL_SIGMA_CAP: usize = 4;
const DELIMITERS: [&str; 8] = ["-", "_", "/", " ", ",", ":", "|", "."];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Select,
    Filter,
    Mutate,
    Gather,
    Spread,
    Summarize,
    Join,
    Separate,
    Cumsum,
}

impl Op {
    pub const ALL: [Op; 9] = [
        Op::Select,
        Op::Filter,
        Op::Mutate,
        Op::Gather,
        Op::Spread,
        Op::Summarize,
        Op::Join,
        Op::Separate,
        Op::Cumsum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Select => "select",
            Op::Filter => "filter",
            Op::Mutate => "mutate",
            Op::Gather => "gather",
            Op::Spread => "spread",
            Op::Summarize => "summarize",
            Op::Join => "join",
            Op::Separate => "separate",
            Op::Cumsum => "cumsum",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn holes(self) -> usize {
        match self {
            Op::Select | Op::Filter | Op::Gather => 1,
            Op::Spread | Op::Join | Op::Separate | Op::Cumsum => 2,
            Op::Mutate | Op::Summarize => 3,
        }
    }

    /// Whether the output schema depends on hole values in a way that can
    /// introduce names not known before the statement is complete.
    fn opens_names(self) -> bool {
        matches!(self, Op::Spread | Op::Separate | Op::Join)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All operator sequences of length 1..=`max`, shorter first, then in
/// operator order.
pub fn enumerate_sketches(max: usize, ops: &[Op]) -> impl Iterator<Item = Vec<Op>> + '_ {
    (1..=max).flat_map(move |n| {
        let total = ops.len().checked_pow(n as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut i| {
            let mut s = vec![ops[0]; n];
            for slot in s.iter_mut().rev() {
                *slot = ops[i % ops.len()];
                i /= ops.len();
            }
            s
        })
    })
}

/// Smallest program size any completion can have.
pub fn sketch_size(sketch: &[Op]) -> usize {
    sketch.iter().map(|o| 1 + o.holes()).sum()
}

/// Sketches that cannot produce anything a shorter one does not: a
/// trailing select is always appended, so a final select or two selects in
/// a row add nothing.
fn redundant(sketch: &[Op]) -> bool {
    sketch.last() == Some(&Op::Select) || sketch.windows(2).any(|w| w == [Op::Select, Op::Select])
}

#[derive(Clone, Debug)]
pub struct SearchLimits {
    /// Statements before the trailing select.
    pub max_statements: usize,
    pub operators: Vec<Op>,
    pub max_constants: usize,
    pub deadline: Option<Instant>,
    pub prune: bool,
    pub max_nodes: Option<u64>,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Abstract columns that must map to the given concrete names.
    pub pinned: ColumnMapping,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_statements: 4,
            operators: Op::ALL.to_vec(),
            max_constants: 64,
            deadline: None,
            prune: true,
            max_nodes: None,
            cancel: None,
            pinned: ColumnMapping::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub sketches: u64,
    pub nodes: u64,
    pub pruned: u64,
    pub completions: u64,
    pub ground_checks: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableSolution {
    /// Ends with a select onto the mapped columns.
    pub program: TableProgram,
    pub sigma: ColumnMapping,
    pub output: Table,
    pub sketch: Vec<Op>,
}

/// First solution in search order.
pub fn learn_table_transform(
    inputs: &[(String, Table)],
    psi: &SpecConstraint,
    limits: SearchLimits,
) -> Option<TableSolution> {
    TableSearch::new(inputs, psi, limits).next()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Arg {
    Src(Source),
    Cols(Vec<String>),
    Col(String),
    Pred(Pred),
    Arith(ArithOp),
    Agg(Agg),
    Operand(Operand),
    Text(String),
}

/// Partial mapping from spec columns (by position) to concrete names;
/// `None` stands for a column some later statement has yet to introduce.
type PSigma = Vec<Option<String>>;

#[derive(Clone)]
struct Node {
    src0: Option<Source>,
    /// Statement being filled; equals the sketch length when complete.
    k: usize,
    args: Vec<Arg>,
    done: Vec<Expr>,
    /// `tables[j]` is the input of statement `j`; one more than `done`.
    tables: Vec<Arc<Table>>,
    sigmas: Arc<Vec<PSigma>>,
    universe: Arc<BTreeSet<String>>,
}

/// Resumable search: iterating yields solutions in search order.
pub struct TableSearch {
    inputs: Vec<Arc<Table>>,
    names: Vec<String>,
    psi: SpecConstraint,
    spec_cols: Vec<String>,
    spec_vals: Vec<HashSet<Value>>,
    pool: Vec<Value>,
    limits: SearchLimits,
    sketches: Box<dyn Iterator<Item = Vec<Op>> + Send>,
    sketch: Vec<Op>,
    stack: Vec<Node>,
    pending: VecDeque<TableSolution>,
    zero_done: bool,
    cache: SatCache,
    base_cache: HashMap<PSigma, Vec<Arc<Table>>>,
    step_cache: HashMap<(usize, usize, Option<String>), (Arc<Table>, Option<Arc<Table>>)>,
    stats: SearchStats,
    seen: HashSet<(usize, u64)>,
    stopped: bool,
}

impl TableSearch {
    pub fn new(inputs: &[(String, Table)], psi: &SpecConstraint, limits: SearchLimits) -> TableSearch {
        let spec_cols = psi.columns();
        let spec_vals = spec_cols
            .iter()
            .map(|c| {
                let mut vals = HashSet::new();
                for t in &psi.tables {
                    if let Some(i) = t.column_index(c) {
                        vals.extend(t.column_values(i).filter(|v| !v.is_null()).cloned());
                    }
                }
                vals
            })
            .collect();
        let ops = limits.operators.clone();
        let max = limits.max_statements;
        let sketches: Box<dyn Iterator<Item = Vec<Op>> + Send> = if ops.is_empty() {
            Box::new(std::iter::empty())
        } else {
            // within a statement count, smaller programs first
            let mut all: Vec<Vec<Op>> = enumerate_sketches(max, &ops).filter(|s| !redundant(s)).collect();
            all.sort_by_key(|s| (s.len(), sketch_size(s)));
            Box::new(all.into_iter())
        };
        TableSearch {
            inputs: inputs.iter().map(|(_, t)| Arc::new(t.clone())).collect(),
            names: inputs.iter().map(|(n, _)| n.clone()).collect(),
            pool: constant_pool(psi, limits.max_constants),
            psi: psi.clone(),
            spec_cols,
            spec_vals,
            limits,
            sketches,
            sketch: Vec::new(),
            stack: Vec::new(),
            pending: VecDeque::new(),
            zero_done: false,
            cache: SatCache::default(),
            base_cache: HashMap::new(),
            step_cache: HashMap::new(),
            stats: SearchStats::default(),
            seen: HashSet::new(),
            stopped: false,
        }
    }

    pub fn stats(&self) -> SearchStats {
        SearchStats {
            ground_checks: self.cache.checks,
            ..self.stats.clone()
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        let over = self.limits.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
            || self.limits.deadline.is_some_and(|d| Instant::now() >= d)
            || self.limits.max_nodes.is_some_and(|m| self.stats.nodes >= m);
        self.stopped = over;
        over
    }

    /// Programs with no statements: a select straight off an input.
    fn zero_statement_solutions(&mut self) {
        for i in 0..self.inputs.len() {
            let t = self.inputs[i].clone();
            self.finish(Vec::new(), Source::Input(i), &t, &[]);
        }
    }

    fn start_sketch(&mut self, sketch: Vec<Op>) {
        self.stats.sketches += 1;
        self.sketch = sketch;
        self.cache.clear();
        self.step_cache.clear();
        self.seen.clear();
        let root = Node {
            src0: None,
            k: 0,
            args: Vec::new(),
            done: Vec::new(),
            tables: Vec::new(),
            sigmas: Arc::new(Vec::new()),
            universe: Arc::new(BTreeSet::new()),
        };
        if self.inputs.len() == 1 {
            if let Some(n) = self.with_source(&root, 0) {
                self.stack.push(n);
            }
        } else {
            self.stack.push(root);
        }
    }

    fn with_source(&mut self, root: &Node, i: usize) -> Option<Node> {
        let t = self.inputs[i].clone();
        let mut n = root.clone();
        n.src0 = Some(Source::Input(i));
        n.tables = vec![t];
        if self.limits.prune {
            let (sig, uni) = self.expand_sigmas(None, &n.tables[0], 0);
            if sig.is_empty() {
                return None;
            }
            n.sigmas = Arc::new(sig);
            n.universe = Arc::new(uni);
        }
        Some(n)
    }

    fn fixed_names(&self, i: usize) -> Vec<String> {
        fixed_names(self.sketch[i], i)
    }

    fn expr_of(&self, i: usize, src: Source, args: &[Arg]) -> Expr {
        build_expr(self.sketch[i], i, src, args)
    }

    fn expand(&mut self, node: Node) -> Vec<Node> {
        let Some(src0) = node.src0 else {
            return (0..self.inputs.len())
                .filter_map(|i| self.with_source(&node, i))
                .collect();
        };
        let k = node.k;
        let op = self.sketch[k];
        let t = node.tables[k].clone();
        let domain = self.domain(op, &node.args, &t, &node.tables);
        let completes = node.args.len() + 1 == op.holes();
        let src = if k == 0 { src0 } else { Source::Var(k - 1) };
        let mut out = Vec::new();
        for v in domain {
            let mut args = node.args.clone();
            args.push(v);
            if !completes {
                let mut child = Node {
                    args,
                    ..node.clone()
                };
                if self.limits.prune && child.args.len() == 1 {
                    if let Some(keep) = self.restrict_names(k, &child.args, &t, &child.sigmas) {
                        if keep.is_empty() {
                            self.stats.pruned += 1;
                            continue;
                        }
                        child.sigmas = Arc::new(keep);
                    }
                }
                out.push(child);
                continue;
            }
            if self.limits.prune && !self.may_fit(k, &args, &t, &node.sigmas) {
                self.stats.pruned += 1;
                continue;
            }
            let e = self.expr_of(k, src, &args);
            let res = {
                let inputs = &self.inputs;
                let tables = &node.tables;
                let env = |s: Source| -> &Table {
                    match s {
                        Source::Input(i) => &inputs[i],
                        Source::Var(j) => &tables[j + 1],
                    }
                };
                e.eval(&env)
            };
            let Ok(r) = res else { continue };
            if r.is_empty() || (op == Op::Filter && r.len() == t.len()) {
                continue;
            }
            // same depth and same table: the subtree was already explored
            let h = table_hash(&r);
            if self.seen.contains(&(k, h)) {
                continue;
            }
            let r = Arc::new(r);
            let mut n = Node {
                src0: node.src0,
                k: k + 1,
                args: Vec::new(),
                done: node.done.clone(),
                tables: node.tables.clone(),
                sigmas: node.sigmas.clone(),
                universe: node.universe.clone(),
            };
            n.done.push(e);
            n.tables.push(r.clone());
            if self.limits.prune && k + 1 == self.sketch.len() {
                // the result is final: only total mappings matter
                if find_sigmas(&self.psi, &self.spec_cols, &self.spec_vals, &r, &self.limits.pinned, 1).is_empty() {
                    self.stats.pruned += 1;
                    continue;
                }
            } else if self.limits.prune {
                let (sig, uni) = self.expand_sigmas(Some((&node.sigmas, &node.universe)), &r, k + 1);
                if sig.is_empty() {
                    self.stats.pruned += 1;
                    continue;
                }
                n.sigmas = Arc::new(sig);
                n.universe = Arc::new(uni);
            }
            self.seen.insert((k, h));
            out.push(n);
        }
        out
    }

    /// Once the columns a select, gather or summarize keeps are known, only
    /// mappings onto those (or onto names later statements add) can
    /// survive. `None` when nothing can be said.
    fn restrict_names(&self, k: usize, args: &[Arg], t: &Table, sigmas: &[PSigma]) -> Option<Vec<PSigma>> {
        if self.sketch[k + 1..].iter().any(|o| o.opens_names()) {
            return None;
        }
        let mut names: HashSet<&str> = match (self.sketch[k], args.first()) {
            (Op::Select, Some(Arg::Cols(c))) => c.iter().map(String::as_str).collect(),
            (Op::Summarize, Some(Arg::Cols(c))) => c.iter().map(String::as_str).collect(),
            (Op::Gather, Some(Arg::Cols(c))) => t.columns().iter().filter(|n| !c.contains(n)).map(String::as_str).collect(),
            _ => return None,
        };
        let later: Vec<String> = (k..self.sketch.len()).flat_map(|i| self.fixed_names(i)).collect();
        names.extend(later.iter().map(String::as_str));
        Some(
            sigmas
                .iter()
                .filter(|s| s.iter().flatten().all(|n| names.contains(n.as_str())))
                .cloned()
                .collect(),
        )
    }

    /// Cheap checks on the last statement before it is evaluated. A filter
    /// must keep every sketch value of a column it tests. A new column that
    /// some mapping uses must be able to hold that column's sketch values:
    /// computed exactly for mutate, drawn from the gathered cells or names
    /// for gather, and bounded by the aggregated column for summarize.
    fn may_fit(&self, k: usize, args: &[Arg], t: &Table, sigmas: &[PSigma]) -> bool {
        if k + 1 != self.sketch.len() {
            return true;
        }
        let col_of = |s: &PSigma, name: &str| s.iter().position(|n| n.as_deref() == Some(name));
        match (self.sketch[k], args) {
            (Op::Filter, [Arg::Pred(Pred::Cmp(Operand::Col(c), op, Operand::Const(v)))]) => sigmas.iter().any(|s| {
                col_of(s, c).is_none_or(|i| self.spec_vals[i].iter().all(|x| op.test(x, v)))
            }),
            (Op::Mutate, [Arg::Arith(op), Arg::Col(lhs), rhs]) => {
                let target = &self.fixed_names(k)[0];
                let needs: Vec<usize> = sigmas.iter().filter_map(|s| col_of(s, target)).collect();
                if needs.is_empty() {
                    // the new column goes unused, so a shorter program does the same
                    return false;
                }
                let Some(a) = t.column_index(lhs) else { return false };
                let b = match rhs {
                    Arg::Operand(Operand::Col(c)) => match t.column_index(c) {
                        Some(j) => Err(j),
                        None => return false,
                    },
                    Arg::Operand(Operand::Const(v)) => Ok(v),
                    _ => return false,
                };
                // mark which needed values some row produces, stopping once all are seen
                let wanted: Vec<(usize, &Value)> =
                    needs.iter().flat_map(|&i| self.spec_vals[i].iter().map(move |v| (i, v))).collect();
                let mut hit = vec![false; wanted.len()];
                let mut left = wanted.len();
                for r in t.rows() {
                    let rv = match b {
                        Ok(v) => op.apply(&r[a], v),
                        Err(j) => op.apply(&r[a], &r[j]),
                    };
                    let Ok(v) = rv else { return false };
                    for (h, (_, w)) in hit.iter_mut().zip(&wanted) {
                        if !*h && **w == v {
                            *h = true;
                            left -= 1;
                        }
                    }
                    if left == 0 {
                        break;
                    }
                }
                if left == 0 {
                    return true;
                }
                needs.iter().any(|&i| wanted.iter().zip(&hit).all(|((j, _), h)| *j != i || *h))
            }
            (Op::Cumsum, _) => {
                // same as mutate: an unused running total changes nothing
                let target = &self.fixed_names(k)[0];
                sigmas.iter().any(|s| col_of(s, target).is_some())
            }
            (Op::Gather, [Arg::Cols(cols)]) => {
                let names = self.fixed_names(k);
                let (key, value) = (&names[0], &names[1]);
                let idx: Vec<usize> = cols.iter().filter_map(|c| t.column_index(c)).collect();
                let keys: Vec<Value> = cols.iter().map(|c| Value::infer(c)).collect();
                let fits = |i: usize, name: &str| {
                    if name == key {
                        self.spec_vals[i].iter().all(|v| keys.contains(v))
                    } else if name == value {
                        self.spec_vals[i].iter().all(|v| idx.iter().any(|&j| t.column_values(j).any(|x| x == v)))
                    } else {
                        true
                    }
                };
                let keep = self.restrict_names(k, args, t, sigmas);
                keep.as_deref()
                    .unwrap_or(sigmas)
                    .iter()
                    .any(|s| s.iter().enumerate().all(|(i, n)| n.as_deref().is_none_or(|n| fits(i, n))))
            }
            (Op::Summarize, [_, Arg::Agg(agg), Arg::Col(c)]) => {
                let target = &self.fixed_names(k)[0];
                let needs: Vec<usize> = sigmas.iter().filter_map(|s| col_of(s, target)).collect();
                if needs.len() < sigmas.len() {
                    // some mapping leaves the aggregate open
                    return true;
                }
                let Some(j) = t.column_index(c) else { return false };
                let nums: Vec<f64> = t.column_values(j).filter_map(Value::as_f64).collect();
                let (lo, hi) = match agg {
                    Agg::Min | Agg::Max => {
                        return needs.iter().any(|&i| column_has_all(t, j, &self.spec_vals[i]));
                    }
                    Agg::Count => (0.0, t.len() as f64),
                    Agg::Avg => nums.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))),
                    Agg::Sum => nums
                        .iter()
                        .fold((0.0, 0.0), |(n, p), &x| if x < 0.0 { (n + x, p) } else { (n, p + x) }),
                };
                let slack = 1e-9 * (lo.abs().max(hi.abs()) + 1.0);
                let within = |v: &Value| v.as_f64().is_some_and(|x| x >= lo - slack && x <= hi + slack);
                needs.iter().any(|&i| self.spec_vals[i].iter().all(within))
            }
            (Op::Select, _) => self
                .restrict_names(k, args, t, sigmas)
                .is_none_or(|keep| !keep.is_empty()),
            _ => true,
        }
    }

    /// Mapping candidates once statements before `k` are complete and
    /// `t` is the table entering statement `k`.
    fn expand_sigmas(
        &self,
        old: Option<(&Vec<PSigma>, &BTreeSet<String>)>,
        t: &Table,
        k: usize,
    ) -> (Vec<PSigma>, BTreeSet<String>) {
        let mut universe: BTreeSet<String> = t.columns().iter().cloned().collect();
        for i in k..self.sketch.len() {
            universe.extend(self.fixed_names(i));
        }
        let open = self.sketch[k..].iter().any(|o| o.opens_names());
        let allowed = |i: usize, name: &str| -> bool {
            if let Some(p) = self.limits.pinned.get(&self.spec_cols[i]) {
                if p != name {
                    return false;
                }
            }
            let Some(ci) = t.column_index(name) else {
                return true;
            };
            column_has_all(t, ci, &self.spec_vals[i])
        };
        let m = self.spec_cols.len();
        let mut out: BTreeSet<PSigma> = BTreeSet::new();
        let fresh: Vec<&String> = match old {
            None => universe.iter().collect(),
            Some((_, prev)) => universe.iter().filter(|n| !prev.contains(*n)).collect(),
        };
        let choices_for = |base: Option<&PSigma>| -> Option<Vec<Vec<Option<String>>>> {
            let mut ch = Vec::with_capacity(m);
            for i in 0..m {
                let mut c: Vec<Option<String>> = Vec::new();
                match base.and_then(|b| b[i].as_ref()) {
                    Some(name) => {
                        if universe.contains(name) && allowed(i, name) {
                            c.push(Some(name.clone()));
                        }
                    }
                    None => {
                        for n in &fresh {
                            if allowed(i, n) {
                                c.push(Some((*n).clone()));
                            }
                        }
                        if open {
                            c.push(None);
                        }
                    }
                }
                if c.is_empty() {
                    return None;
                }
                ch.push(c);
            }
            Some(ch)
        };
        let bases: Vec<Option<&PSigma>> = match old {
            None => vec![None],
            Some((prev, _)) => prev.iter().map(Some).collect(),
        };
        for b in bases {
            if let Some(ch) = choices_for(b) {
                injective_product(&ch, &mut Vec::with_capacity(m), &mut out);
            }
            if out.len() >= SIGMA_CAP {
                break;
            }
        }
        (out.into_iter().take(SIGMA_CAP).collect(), universe)
    }

    fn domain(&self, op: Op, args: &[Arg], t: &Table, tables: &[Arc<Table>]) -> Vec<Arg> {
        let k = tables.len() - 1;
        let cols = t.columns();
        let w = cols.len();
        let stage = args.len();
        let numeric: Vec<bool> = (0..w).map(|i| is_numeric(t, i)).collect();
        let texty: Vec<bool> = (0..w).map(|i| t.column_values(i).any(|v| matches!(v, Value::Text(_)))).collect();
        let pick = |idx: Vec<usize>| Arg::Cols(idx.into_iter().map(|i| cols[i].clone()).collect());
        match (op, stage) {
            (Op::Select, 0) => subsets(w, (1..w).rev(), SUBSET_CAP).into_iter().map(pick).collect(),
            (Op::Filter, 0) => {
                let mut out = Vec::new();
                for (i, c) in cols.iter().enumerate() {
                    for v in &self.pool {
                        let ops: &[CmpOp] = match v {
                            Value::Num(_) if numeric[i] => &CmpOp::ALL,
                            Value::Text(_) if texty[i] => &[CmpOp::Eq, CmpOp::Ne],
                            Value::DateTime(_) => &CmpOp::ALL,
                            _ => &[],
                        };
                        for &o in ops {
                            out.push(Arg::Pred(Pred::Cmp(Operand::Col(c.clone()), o, Operand::Const(v.clone()))));
                        }
                    }
                }
                out
            }
            (Op::Mutate, 0) => {
                let mut out = Vec::new();
                if numeric.iter().any(|b| *b) {
                    out.extend([ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div].map(Arg::Arith));
                }
                if w > 0 {
                    out.push(Arg::Arith(ArithOp::Concat));
                }
                out
            }
            (Op::Mutate, 1) => {
                let Arg::Arith(a) = args[0] else { return Vec::new() };
                (0..w)
                    .filter(|&i| a == ArithOp::Concat || numeric[i])
                    .map(|i| Arg::Col(cols[i].clone()))
                    .collect()
            }
            (Op::Mutate, 2) => {
                let (Arg::Arith(a), Arg::Col(lhs)) = (&args[0], &args[1]) else {
                    return Vec::new();
                };
                let li = t.column_index(lhs).unwrap_or(0);
                let mut out = Vec::new();
                for i in 0..w {
                    let ok = match a {
                        ArithOp::Add | ArithOp::Mul => numeric[i] && i >= li,
                        ArithOp::Sub | ArithOp::Div => numeric[i] && i != li,
                        ArithOp::Concat => i != li,
                    };
                    if ok {
                        out.push(Arg::Operand(Operand::Col(cols[i].clone())));
                    }
                }
                for v in &self.pool {
                    let ok = match (a, v) {
                        (ArithOp::Add, Value::Num(x)) => *x != 0.0,
                        (ArithOp::Sub, Value::Num(x)) => *x > 0.0,
                        (ArithOp::Mul | ArithOp::Div, Value::Num(x)) => *x != 0.0 && *x != 1.0,
                        (ArithOp::Concat, Value::Text(_)) => true,
                        _ => false,
                    };
                    if ok {
                        out.push(Arg::Operand(Operand::Const(v.clone())));
                    }
                }
                out
            }
            (Op::Gather, 0) => subsets(w, (2..=w).rev(), SUBSET_CAP).into_iter().map(pick).collect(),
            (Op::Spread, 0) => (0..w)
                .filter(|&i| w >= 2 && t.column_values(i).all(|v| !v.is_null()))
                .map(|i| Arg::Col(cols[i].clone()))
                .collect(),
            (Op::Spread, 1) => {
                let Arg::Col(key) = &args[0] else { return Vec::new() };
                cols.iter().filter(|c| *c != key).map(|c| Arg::Col(c.clone())).collect()
            }
            (Op::Summarize, 0) => subsets(w, 0..=w.saturating_sub(1).min(3), SUBSET_CAP)
                .into_iter()
                .map(pick)
                .collect(),
            (Op::Summarize, 1) => Agg::ALL.into_iter().map(Arg::Agg).collect(),
            (Op::Summarize, 2) => {
                let (Arg::Cols(keys), Arg::Agg(agg)) = (&args[0], &args[1]) else {
                    return Vec::new();
                };
                (0..w)
                    .filter(|&i| !keys.contains(&cols[i]))
                    .filter(|&i| !matches!(agg, Agg::Sum | Agg::Avg) || numeric[i])
                    .map(|i| Arg::Col(cols[i].clone()))
                    .collect()
            }
            (Op::Join, 0) => {
                let mut out: Vec<Arg> = (0..self.inputs.len()).map(|i| Arg::Src(Source::Input(i))).collect();
                // earlier results other than the left operand itself
                out.extend((0..k.saturating_sub(1)).map(|j| Arg::Src(Source::Var(j))));
                out
            }
            (Op::Join, 1) => {
                let Arg::Src(r) = args[0] else { return Vec::new() };
                let right: &Table = match r {
                    Source::Input(i) => &self.inputs[i],
                    Source::Var(j) => &tables[j + 1],
                };
                join_preds(t, right)
            }
            (Op::Separate, 0) => (0..w)
                .filter(|&i| texty[i] && !delims(t, i).is_empty())
                .map(|i| Arg::Col(cols[i].clone()))
                .collect(),
            (Op::Separate, 1) => {
                let Arg::Col(c) = &args[0] else { return Vec::new() };
                t.column_index(c)
                    .map(|i| delims(t, i).into_iter().map(|d| Arg::Text(d.to_string())).collect())
                    .unwrap_or_default()
            }
            (Op::Cumsum, 0) => (0..w).filter(|&i| numeric[i]).map(|i| Arg::Col(cols[i].clone())).collect(),
            (Op::Cumsum, 1) => {
                let Arg::Col(c) = &args[0] else { return Vec::new() };
                let rest: Vec<usize> = (0..w).filter(|&i| cols[i] != *c).collect();
                subsets(rest.len(), 0..=rest.len().min(2), SUBSET_CAP)
                    .into_iter()
                    .map(|s| Arg::Cols(s.into_iter().map(|i| cols[rest[i]].clone()).collect()))
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// A partly filled statement has its parent's bounds, except once a
    /// join's right side or a separated column is known.
    fn bounds_changed(&self, node: &Node) -> bool {
        node.args.is_empty()
            || (node.args.len() == 1 && matches!(self.sketch.get(node.k), Some(Op::Join | Op::Separate)))
    }

    /// Whether some tracked mapping survives the bounds at `node`; keeps
    /// only the survivors.
    fn prune(&mut self, node: &mut Node) -> bool {
        if node.src0.is_none() {
            return true;
        }
        let k = node.k;
        let n = self.sketch.len();
        // forward upper bounds: var j is the input of statement j, var n
        // the final result
        let mut uppers: Vec<(usize, Rel, Arc<Table>)> = vec![(k, Rel::Sub, node.tables[k].clone())];
        if k < n {
            let first = match (self.sketch[k], node.args.first()) {
                (Op::Filter, _) => Some((Rel::Sub, node.tables[k].clone())),
                (Op::Select, _) => Some((Rel::Named, node.tables[k].clone())),
                (Op::Join, Some(Arg::Src(src))) => {
                    let l = &node.tables[k];
                    let r = match src {
                        Source::Input(i) => &self.inputs[*i],
                        Source::Var(j) => &node.tables[j + 1],
                    };
                    if l.len() * r.len() * (l.width() + r.width()) <= GROUND_CHECK_CELL_CAP {
                        Some((Rel::Sub, Arc::new(l.cross_product(r))))
                    } else {
                        None
                    }
                }
                _ => None,
            };
            if let Some((mut rel, u)) = first {
                uppers.push((k + 1, rel, u.clone()));
                for j in k + 1..n {
                    rel = match self.sketch[j] {
                        Op::Filter => rel.compose(Rel::Sub),
                        Op::Select => rel.compose(Rel::Named),
                        _ => break,
                    };
                    uppers.push((j + 1, rel, u.clone()));
                }
            }
        }
        let sep_col = match (self.sketch.get(k), node.args.first()) {
            (Some(Op::Separate), Some(Arg::Col(c))) => Some(c.clone()),
            _ => None,
        };
        let sigmas = node.sigmas.clone();
        let mut alive = Vec::new();
        for s in sigmas.iter() {
            let mut atoms: Vec<Atom> = uppers.iter().map(|(j, r, u)| Atom::upper(*j, *r, u.clone())).collect();
            for base in self.bases(s) {
                let mut cur = base;
                atoms.push(Atom::lower(cur.clone(), Rel::Named, n));
                for i in (k..n).rev() {
                    let extra = if i == k { sep_col.clone() } else { None };
                    match self.step_back(&cur, i, extra) {
                        Some(next) => {
                            atoms.push(Atom::lower(next.clone(), Rel::Named, i));
                            cur = next;
                        }
                        None => break,
                    }
                }
            }
            if check_sat(&atoms, &mut self.cache) == Sat::Maybe {
                alive.push(s.clone());
            }
        }
        if alive.is_empty() {
            return false;
        }
        if alive.len() < sigmas.len() {
            node.sigmas = Arc::new(alive);
        }
        true
    }

    /// Spec tables restricted to mapped columns, renamed to concrete names.
    fn bases(&mut self, s: &PSigma) -> Vec<Arc<Table>> {
        if let Some(b) = self.base_cache.get(s) {
            return b.clone();
        }
        let mut out = Vec::new();
        for t in &self.psi.tables {
            let mut idx = Vec::new();
            let mut names = Vec::new();
            for (i, c) in t.columns().iter().enumerate() {
                let pos = self.spec_cols.iter().position(|x| x == c).expect("spec column");
                if let Some(n) = &s[pos] {
                    idx.push(i);
                    names.push(n.clone());
                }
            }
            if idx.is_empty() || t.is_empty() {
                continue;
            }
            let p = t.project_indices(&idx);
            let renamed = Table::new(names, p.into_rows()).expect("injective mapping");
            out.push(Arc::new(renamed));
        }
        self.base_cache.insert(s.clone(), out.clone());
        out
    }

    /// Lower bound on the input of statement `i` given one on its output.
    fn step_back(&mut self, low: &Arc<Table>, i: usize, extra: Option<String>) -> Option<Arc<Table>> {
        let key = (Arc::as_ptr(low) as usize, i, extra.clone());
        if let Some((_, r)) = self.step_cache.get(&key) {
            return r.clone();
        }
        let drop_cols = |t: &Table, names: &[String]| -> Table {
            let keep: Vec<usize> = (0..t.width()).filter(|&c| !names.contains(&t.columns()[c])).collect();
            t.project_indices(&keep)
        };
        let r = match self.sketch[i] {
            Op::Filter | Op::Select => Some(low.clone()),
            Op::Mutate | Op::Summarize | Op::Cumsum => {
                let names = self.fixed_names(i);
                if names.iter().any(|n| low.has_column(n)) {
                    Some(Arc::new(drop_cols(low, &names)))
                } else {
                    Some(low.clone())
                }
            }
            Op::Gather => Some(Arc::new(drop_cols(low, &self.fixed_names(i)).distinct())),
            Op::Separate => extra.map(|c| {
                let (a, b) = separate_names(&c);
                Arc::new(drop_cols(low, &[a, b]))
            }),
            Op::Spread | Op::Join => None,
        };
        let r = r.filter(|t| t.width() > 0 && !t.is_empty());
        self.step_cache.insert(key, (low.clone(), r.clone()));
        r
    }

    fn finish(&mut self, done: Vec<Expr>, src0: Source, out: &Table, sketch: &[Op]) {
        self.stats.completions += 1;
        let sigmas = find_sigmas(&self.psi, &self.spec_cols, &self.spec_vals, out, &self.limits.pinned, FINAL_SIGMA_CAP);
        for sigma in sigmas {
            let last = if done.is_empty() { src0 } else { Source::Var(done.len() - 1) };
            let mut stmts = done.clone();
            stmts.push(Expr::Select {
                src: last,
                cols: self.spec_cols.iter().map(|c| sigma.get(c).expect("total").to_string()).collect(),
            });
            let program = TableProgram {
                inputs: self.names.clone(),
                stmts,
            };
            let inputs: Vec<&Table> = self.inputs.iter().map(|t| t.as_ref()).collect();
            let Ok(output) = program.eval(&inputs) else { continue };
            let (program, sigma, output) = prettify(program, sigma, output, &inputs);
            self.pending.push_back(TableSolution {
                program,
                sigma,
                output,
                sketch: sketch.to_vec(),
            });
        }
    }
}

impl Iterator for TableSearch {
    type Item = TableSolution;

    fn next(&mut self) -> Option<TableSolution> {
        loop {
            if let Some(s) = self.pending.pop_front() {
                return Some(s);
            }
            if self.out_of_budget() {
                return None;
            }
            if !self.zero_done {
                self.zero_done = true;
                self.zero_statement_solutions();
                continue;
            }
            let Some(mut node) = self.stack.pop() else {
                let next = self.sketches.next()?;
                self.start_sketch(next);
                continue;
            };
            self.stats.nodes += 1;
            if node.k == self.sketch.len() {
                let out = node.tables[node.k].clone();
                let sketch = self.sketch.clone();
                self.finish(node.done, node.src0.expect("source"), &out, &sketch);
                continue;
            }
            let children = self.expand(std::mem::replace(
                &mut node,
                Node {
                    src0: None,
                    k: 0,
                    args: Vec::new(),
                    done: Vec::new(),
                    tables: Vec::new(),
                    sigmas: Arc::new(Vec::new()),
                    universe: Arc::new(BTreeSet::new()),
                },
            ));
            for mut c in children.into_iter().rev() {
                if self.limits.prune && self.bounds_changed(&c) && !self.prune(&mut c) {
                    self.stats.pruned += 1;
                    continue;
                }
                self.stack.push(c);
            }
        }
    }
}

fn fixed_names(op: Op, i: usize) -> Vec<String> {
    let i = i + 1;
    match op {
        Op::Mutate => vec![format!("__m{i}")],
        Op::Summarize => vec![format!("__s{i}")],
        Op::Cumsum => vec![format!("__c{i}")],
        Op::Gather => vec![format!("__k{i}"), format!("__v{i}")],
        _ => Vec::new(),
    }
}

fn build_expr(op: Op, i: usize, src: Source, args: &[Arg]) -> Expr {
    let names = fixed_names(op, i);
    let col = |a: &Arg| match a {
        Arg::Col(c) => c.clone(),
        _ => unreachable!("column hole"),
    };
    let cols = |a: &Arg| match a {
        Arg::Cols(c) => c.clone(),
        _ => unreachable!("column list hole"),
    };
    let pred = |a: &Arg| match a {
        Arg::Pred(p) => p.clone(),
        _ => unreachable!("predicate hole"),
    };
    match op {
        Op::Select => Expr::Select { src, cols: cols(&args[0]) },
        Op::Filter => Expr::Filter { src, pred: pred(&args[0]) },
        Op::Mutate => {
            let (Arg::Arith(o), Arg::Operand(rhs)) = (&args[0], &args[2]) else {
                unreachable!("mutate holes")
            };
            Expr::Mutate {
                src,
                target: names[0].clone(),
                op: *o,
                lhs: col(&args[1]),
                rhs: rhs.clone(),
            }
        }
        Op::Gather => Expr::Gather {
            src,
            cols: cols(&args[0]),
            key: names[0].clone(),
            value: names[1].clone(),
        },
        Op::Spread => Expr::Spread {
            src,
            key: col(&args[0]),
            value: col(&args[1]),
        },
        Op::Summarize => {
            let Arg::Agg(agg) = args[1] else { unreachable!("agg hole") };
            Expr::Summarize {
                src,
                keys: cols(&args[0]),
                agg,
                col: col(&args[2]),
                target: names[0].clone(),
            }
        }
        Op::Join => {
            let Arg::Src(right) = args[0] else { unreachable!("source hole") };
            Expr::Join {
                left: src,
                right,
                pred: pred(&args[1]),
            }
        }
        Op::Separate => {
            let Arg::Text(d) = &args[1] else { unreachable!("delimiter hole") };
            Expr::Separate {
                src,
                col: col(&args[0]),
                delim: d.clone(),
            }
        }
        Op::Cumsum => Expr::Cumsum {
            src,
            col: col(&args[0]),
            keys: cols(&args[1]),
            target: names[0].clone(),
        },
    }
}

fn injective_product(ch: &[Vec<Option<String>>], cur: &mut PSigma, out: &mut BTreeSet<PSigma>) {
    if out.len() >= SIGMA_CAP {
        return;
    }
    if cur.len() == ch.len() {
        out.insert(cur.clone());
        return;
    }
    for c in &ch[cur.len()] {
        if c.is_some() && cur.contains(c) {
            continue;
        }
        cur.push(c.clone());
        injective_product(ch, cur, out);
        cur.pop();
    }
}

/// Mappings from spec columns to columns of `out` under which the spec
/// holds.
fn column_has_all(t: &Table, j: usize, vals: &HashSet<Value>) -> bool {
    // short columns and few values: scanning beats hashing
    if t.len() * vals.len() <= 4096 {
        vals.iter().all(|v| t.column_values(j).any(|x| x == v))
    } else {
        let have: HashSet<&Value> = t.column_values(j).collect();
        vals.iter().all(|v| have.contains(v))
    }
}

pub fn find_sigmas(
    psi: &SpecConstraint,
    spec_cols: &[String],
    spec_vals: &[HashSet<Value>],
    out: &Table,
    pinned: &ColumnMapping,
    cap: usize,
) -> Vec<ColumnMapping> {
    let cands: Vec<Vec<usize>> = spec_cols
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (0..out.width())
                .filter(|&j| pinned.get(c).is_none_or(|p| p == out.columns()[j]))
                .filter(|&j| column_has_all(out, j, &spec_vals[i]))
                .collect()
        })
        .collect();
    let mut found = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn go(
        psi: &SpecConstraint,
        spec_cols: &[String],
        cands: &[Vec<usize>],
        out: &Table,
        cur: &mut Vec<usize>,
        found: &mut Vec<ColumnMapping>,
        cap: usize,
    ) {
        if found.len() >= cap {
            return;
        }
        let mapping = |cur: &[usize]| {
            ColumnMapping::from_pairs(
                cur.iter()
                    .enumerate()
                    .map(|(i, &j)| (spec_cols[i].clone(), out.columns()[j].clone())),
            )
        };
        if cur.len() == spec_cols.len() {
            let m = mapping(cur);
            if psi.eval(out, &m).unwrap_or(false) {
                found.push(m);
            }
            return;
        }
        for &j in &cands[cur.len()] {
            if cur.contains(&j) {
                continue;
            }
            cur.push(j);
            // check tables whose columns are now all bound
            let m = mapping(cur);
            let ok = psi.tables.iter().all(|t| {
                let bound: Vec<usize> = t.columns().iter().filter_map(|c| m.get(c).and_then(|n| out.column_index(n))).collect();
                bound.len() < t.width() || t.bag_subset(&out.project_indices(&bound))
            });
            if ok {
                go(psi, spec_cols, cands, out, cur, found, cap);
            }
            cur.pop();
        }
    }
    go(psi, spec_cols, &cands, out, &mut cur, &mut found, cap);
    found
}

/// Values a filter or mutate may use: everything the spec mentions, then
/// pairwise sums and differences of its numbers.
pub fn constant_pool(psi: &SpecConstraint, max: usize) -> Vec<Value> {
    let mut seen: BTreeSet<Value> = BTreeSet::new();
    let mut out = Vec::new();
    for t in &psi.tables {
        for r in t.rows() {
            for v in r {
                if !v.is_null() && seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
    }
    let nums: Vec<f64> = out.iter().filter_map(Value::as_f64).collect();
    'outer: for (i, a) in nums.iter().enumerate() {
        for b in &nums[i + 1..] {
            for v in [a + b, a - b, b - a] {
                if out.len() >= max {
                    break 'outer;
                }
                let v = Value::num(crate::viz_synth::snap(v));
                if !v.is_null() && seen.insert(v.clone()) {
                    out.push(v);
                }
            }
        }
    }
    out.truncate(max);
    out
}

fn is_numeric(t: &Table, i: usize) -> bool {
    let mut any = false;
    for v in t.column_values(i) {
        match v {
            Value::Num(_) => any = true,
            Value::Null => {}
            _ => return false,
        }
    }
    any
}

fn delims(t: &Table, i: usize) -> Vec<&'static str> {
    DELIMITERS
        .into_iter()
        .filter(|d| t.column_values(i).any(|v| matches!(v, Value::Text(s) if s.contains(d))))
        .collect()
}

fn join_preds(left: &Table, right: &Table) -> Vec<Arg> {
    let names = cross_columns(left.columns(), right.columns());
    let mut out = Vec::new();
    for a in 0..left.width() {
        let la: HashSet<&Value> = left.column_values(a).filter(|v| !v.is_null()).collect();
        for b in 0..right.width() {
            if right.column_values(b).any(|v| la.contains(v)) {
                out.push(Arg::Pred(Pred::Cmp(
                    Operand::Col(names[a].clone()),
                    CmpOp::Eq,
                    Operand::Col(names[left.width() + b].clone()),
                )));
            }
        }
    }
    out
}

/// Index combinations of each size in `sizes`, lexicographic within a
/// size, truncated at `cap`.
fn subsets(n: usize, sizes: impl Iterator<Item = usize>, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in sizes {
        if k > n {
            continue;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if out.len() >= cap {
                return out;
            }
            out.push(idx.clone());
            let mut i = k;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if idx[i] < n - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    out
}

fn table_hash(t: &Table) -> u64 {
    // rows combined by wrapping sum, so no sort is needed
    let mut h = DefaultHasher::new();
    t.columns().hash(&mut h);
    let mut acc = h.finish();
    for r in t.rows() {
        let mut h = DefaultHasher::new();
        r.hash(&mut h);
        let x = h.finish();
        acc = acc.wrapping_add(x ^ (x >> 29).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    acc ^ t.len() as u64
}

fn rename_str(s: &str, old: &str, new: &str) -> Option<String> {
    let rest = s.strip_prefix(old)?;
    if rest.chars().next().is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    Some(format!("{new}{rest}"))
}

fn rename_in(s: &mut String, old: &str, new: &str) {
    if let Some(r) = rename_str(s, old, new) {
        *s = r;
    }
}

fn rename_pred(p: &mut Pred, old: &str, new: &str) {
    match p {
        Pred::Cmp(a, _, b) => {
            for o in [a, b] {
                if let Operand::Col(c) = o {
                    rename_in(c, old, new);
                }
            }
        }
        Pred::IsNull(c) => rename_in(c, old, new),
        Pred::And(a, b) => {
            rename_pred(a, old, new);
            rename_pred(b, old, new);
        }
    }
}

fn rename_expr(e: &mut Expr, old: &str, new: &str) {
    match e {
        Expr::Select { cols, .. } | Expr::Gather { cols, .. } => {
            for c in cols.iter_mut() {
                rename_in(c, old, new);
            }
            if let Expr::Gather { key, value, .. } = e {
                rename_in(key, old, new);
                rename_in(value, old, new);
            }
        }
        Expr::Filter { pred, .. } | Expr::Join { pred, .. } => rename_pred(pred, old, new),
        Expr::Mutate { target, lhs, rhs, .. } => {
            rename_in(target, old, new);
            rename_in(lhs, old, new);
            if let Operand::Col(c) = rhs {
                rename_in(c, old, new);
            }
        }
        Expr::Spread { key, value, .. } => {
            rename_in(key, old, new);
            rename_in(value, old, new);
        }
        Expr::Summarize { keys, col, target, .. } | Expr::Cumsum { keys, col, target, .. } => {
            for k in keys.iter_mut() {
                rename_in(k, old, new);
            }
            rename_in(col, old, new);
            rename_in(target, old, new);
        }
        Expr::Separate { col, .. } => rename_in(col, old, new),
    }
}

/// Replaces placeholder column names with readable ones, keeping the
/// original when the renamed program does not reproduce the output.
fn prettify(
    program: TableProgram,
    sigma: ColumnMapping,
    output: Table,
    inputs: &[&Table],
) -> (TableProgram, ColumnMapping, Table) {
    let Ok(vals) = program.eval_all(inputs) else {
        return (program, sigma, output);
    };
    let mut taken: HashSet<String> = inputs.iter().flat_map(|t| t.columns().iter().cloned()).collect();
    taken.extend(vals.iter().flat_map(|t| t.columns().iter().cloned()));
    let mut p = program.clone();
    let mut renames: Vec<(String, String)> = Vec::new();
    for i in 0..p.stmts.len() {
        let wanted: Vec<(String, String)> = match &p.stmts[i] {
            Expr::Mutate { target, op, lhs, rhs, .. } => {
                let r = match rhs {
                    Operand::Col(c) => c.clone(),
                    Operand::Const(v) => v.to_string(),
                };
                let sym = if *op == ArithOp::Concat { "_" } else { op.symbol() };
                vec![(target.clone(), format!("{lhs}{sym}{r}"))]
            }
            Expr::Summarize { agg, col, target, .. } => vec![(
                target.clone(),
                if *agg == Agg::Count { "count".to_string() } else { format!("{}_{col}", agg.name()) },
            )],
            Expr::Cumsum { col, target, .. } => vec![(target.clone(), format!("cumsum_{col}"))],
            Expr::Gather { key, value, .. } => vec![(key.clone(), "key".into()), (value.clone(), "value".into())],
            _ => Vec::new(),
        };
        for (old, base) in wanted {
            if !old.starts_with("__") {
                continue;
            }
            let mut name = base.clone();
            let mut n = 2;
            while taken.contains(&name) {
                name = format!("{base}_{n}");
                n += 1;
            }
            taken.insert(name.clone());
            for e in p.stmts.iter_mut() {
                rename_expr(e, &old, &name);
            }
            renames.push((old, name));
        }
    }
    if renames.is_empty() {
        return (program, sigma, output);
    }
    let rename_all = |s: &str| -> String {
        let mut s = s.to_string();
        for (o, n) in &renames {
            rename_in(&mut s, o, n);
        }
        s
    };
    let expected = output.rename_columns(rename_all);
    match p.eval(inputs) {
        Ok(t) if t.columns() == expected.columns() && t.bag_eq(&expected) => {
            let sigma = ColumnMapping::from_pairs(sigma.pairs().iter().map(|(a, b)| (a.clone(), rename_all(b))));
            (p, sigma, t)
        }
        _ => (program, sigma, output),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sketch_counts() {
        assert_eq!(enumerate_sketches(1, &Op::ALL).count(), 9);
        assert_eq!(enumerate_sketches(2, &Op::ALL).count(), 9 + 81);
        let first: Vec<Vec<Op>> = enumerate_sketches(2, &Op::ALL).take(10).collect();
        assert_eq!(first[0], vec![Op::Select]);
        assert_eq!(first[9], vec![Op::Select, Op::Select]);
    }

    #[test]
    fn subsets_are_combinations() {
        assert_eq!(subsets(4, 2..=2, 100).len(), 6);
        assert_eq!(subsets(3, 0..=3, 100).len(), 8);
        assert_eq!(subsets(3, 0..=0, 100), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn rename_respects_suffixes() {
        assert_eq!(rename_str("__m1.1", "__m1", "A+B").as_deref(), Some("A+B.1"));
        assert_eq!(rename_str("__m12", "__m1", "A+B"), None);
    }
}

#[cfg(test)]
mod running {
    use super::*;

    fn inputs() -> Vec<(String, Table)> {
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
        vec![("T1".into(), t1), ("T2".into(), t2)]
    }

    fn spec() -> SpecConstraint {
        SpecConstraint {
            tables: vec![Table::from_rows(
                &["c1", "c2", "c3"],
                [vec![Value::from(1), 7.into(), "M".into()], vec![2.into(), 6.into(), "M".into()]],
            )
            .unwrap()],
            side: Vec::new(),
        }
    }

    #[test]
    fn finds_join_mutate_select() {
        let mut search = TableSearch::new(&inputs(), &spec(), SearchLimits::default());
        let first = search.next().expect("solution");
        assert_eq!(first.program.stmts.len(), 3);
        assert_eq!(first.sigma.get("c3"), Some("Gender"));
        // two points leave room for constant-offset programs of equal size;
        // the intended one follows shortly after
        let intended = |s: &TableSolution| {
            let text = s.program.to_string();
            text.contains("join(") && text.contains("ID.1 == ID.2") && text.contains("A+Aneg = A + Aneg")
                && s.sigma.get("c1") == Some("Cond")
        };
        let sol = std::iter::once(first.clone())
            .chain(search.by_ref().take(30))
            .find(intended)
            .expect("intended program");
        assert_eq!(sol.sigma.get("c1"), Some("Cond"));
        assert_eq!(sol.sigma.get("c2"), Some("A+Aneg"));
        let sol = first;
        let pruned = search.stats();
        let unpruned = {
            let limits = SearchLimits { prune: false, ..SearchLimits::default() };
            let mut s = TableSearch::new(&inputs(), &spec(), limits);
            let u = s.next().expect("solution");
            assert_eq!(u.program, sol.program);
            s.stats()
        };
        assert!(pruned.nodes < unpruned.nodes, "{pruned:?} vs {unpruned:?}");
    }

    #[test]
    fn identity_when_input_already_fits() {
        let (_, t1) = inputs().remove(0);
        let psi = SpecConstraint {
            tables: vec![Table::from_rows(&["c1", "c2"], [vec![Value::from(2), 5.into()]]).unwrap()],
            side: Vec::new(),
        };
        let sol = learn_table_transform(&[("T".into(), t1)], &psi, SearchLimits::default()).unwrap();
        assert_eq!(sol.program.stmts.len(), 1);
        assert_eq!(sol.program.to_string(), "t1 = select(T, Cond, A)");
    }
}
