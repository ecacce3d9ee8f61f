//! The table transformation language and its interpreter.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::table::{cross_columns, Row, Table, TableError};
use crate::value::Value;
use crate::viz_synth::snap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Schema(#[from] TableError),
    #[error("spread: key `{key}` appears twice for the same id columns")]
    SpreadCollision { key: String },
    #[error("spread: new column `{0}` clashes with an existing column")]
    SpreadClash(String),
    #[error("spread: null key")]
    NullKey,
    #[error("{op}: `{value}` is not a number")]
    NonNumeric { op: &'static str, value: String },
    #[error("division by zero")]
    DivByZero,
    #[error("{agg:?} over a group whose values are all null")]
    AllNull { agg: Agg },
    #[error("statement {stmt} refers to {src}, which is not defined yet")]
    BadSource { stmt: usize, src: String },
    #[error("column `{0}` already exists")]
    Exists(String),
    #[error("empty program")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Input(usize),
    /// Result of an earlier statement (0-based).
    Var(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn test(self, a: &Value, b: &Value) -> bool {
        if a.is_null() || b.is_null() {
            return false;
        }
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Col(String),
    Const(Value),
}

impl Operand {
    fn resolve(&self, t: &Table) -> Result<Resolved, EvalError> {
        Ok(match self {
            Operand::Col(c) => Resolved::Col(t.require_column(c)?),
            Operand::Const(v) => Resolved::Const(v.clone()),
        })
    }
}

enum Resolved {
    Col(usize),
    Const(Value),
}

impl Resolved {
    fn get<'a>(&'a self, r: &'a Row) -> &'a Value {
        match self {
            Resolved::Col(i) => &r[*i],
            Resolved::Const(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Cmp(Operand, CmpOp, Operand),
    IsNull(String),
    And(Box<Pred>, Box<Pred>),
}

impl Pred {
    pub fn columns(&self) -> Vec<&str> {
        match self {
            Pred::Cmp(a, _, b) => [a, b]
                .into_iter()
                .filter_map(|o| match o {
                    Operand::Col(c) => Some(c.as_str()),
                    Operand::Const(_) => None,
                })
                .collect(),
            Pred::IsNull(c) => vec![c.as_str()],
            Pred::And(a, b) => {
                let mut v = a.columns();
                v.extend(b.columns());
                v
            }
        }
    }

    fn compile(&self, t: &Table) -> Result<Box<dyn Fn(&Row) -> bool + '_>, EvalError> {
        Ok(match self {
            Pred::Cmp(a, op, b) => {
                let (a, b, op) = (a.resolve(t)?, b.resolve(t)?, *op);
                Box::new(move |r| op.test(a.get(r), b.get(r)))
            }
            Pred::IsNull(c) => {
                let i = t.require_column(c)?;
                Box::new(move |r| r[i].is_null())
            }
            Pred::And(a, b) => {
                let (a, b) = (a.compile(t)?, b.compile(t)?);
                Box::new(move |r| a(r) && b(r))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
}

impl ArithOp {
    pub const ALL: [ArithOp; 5] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Concat];

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Concat => "++",
        }
    }

    pub fn apply(self, a: &Value, b: &Value) -> Result<Value, EvalError> {
        if a.is_null() || b.is_null() {
            return Ok(Value::Null);
        }
        if self == ArithOp::Concat {
            return Ok(Value::text(format!("{a}{b}")));
        }
        let x = number(a, "mutate")?;
        let y = number(b, "mutate")?;
        Ok(Value::num(snap(match self {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => {
                if y == 0.0 {
                    return Err(EvalError::DivByZero);
                }
                x / y
            }
            ArithOp::Concat => unreachable!(),
        })))
    }
}

fn number(v: &Value, op: &'static str) -> Result<f64, EvalError> {
    v.as_f64().ok_or_else(|| EvalError::NonNumeric {
        op,
        value: v.to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Agg {
    Min,
    Max,
    Sum,
    Count,
    Avg,
}

impl Agg {
    pub const ALL: [Agg; 5] = [Agg::Min, Agg::Max, Agg::Sum, Agg::Count, Agg::Avg];

    pub fn name(self) -> &'static str {
        match self {
            Agg::Min => "min",
            Agg::Max => "max",
            Agg::Sum => "sum",
            Agg::Count => "count",
            Agg::Avg => "avg",
        }
    }

    pub fn apply<'a>(self, vals: impl Iterator<Item = &'a Value>) -> Result<Value, EvalError> {
        let vals: Vec<&Value> = vals.filter(|v| !v.is_null()).collect();
        if self == Agg::Count {
            return Ok(Value::num(vals.len() as f64));
        }
        if vals.is_empty() {
            return Err(EvalError::AllNull { agg: self });
        }
        Ok(match self {
            Agg::Min => (*vals.iter().min().unwrap()).clone(),
            Agg::Max => (*vals.iter().max().unwrap()).clone(),
            Agg::Sum | Agg::Avg => {
                let mut s = 0.0;
                for v in &vals {
                    s += number(v, self.name())?;
                }
                if self == Agg::Avg {
                    s /= vals.len() as f64;
                }
                Value::num(snap(s))
            }
            Agg::Count => unreachable!(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Select {
        src: Source,
        cols: Vec<String>,
    },
    Filter {
        src: Source,
        pred: Pred,
    },
    Join {
        left: Source,
        right: Source,
        pred: Pred,
    },
    Mutate {
        src: Source,
        target: String,
        op: ArithOp,
        lhs: String,
        rhs: Operand,
    },
    /// Unpivots `cols` into (`key`, `value`) pairs; the other columns are
    /// kept as ids.
    Gather {
        src: Source,
        cols: Vec<String>,
        key: String,
        value: String,
    },
    /// Pivots `key` values into columns filled from `value`; the other
    /// columns are ids.
    Spread {
        src: Source,
        key: String,
        value: String,
    },
    Summarize {
        src: Source,
        keys: Vec<String>,
        agg: Agg,
        col: String,
        target: String,
    },
    /// Splits `col` at the first `delim` into `{col}_1` and `{col}_2`.
    Separate {
        src: Source,
        col: String,
        delim: String,
    },
    /// Running sum of `col` within each `keys` group, ordered by the
    /// remaining columns.
    Cumsum {
        src: Source,
        col: String,
        keys: Vec<String>,
        target: String,
    },
}

impl Expr {
    pub fn name(&self) -> &'static str {
        match self {
            Expr::Select { .. } => "select",
            Expr::Filter { .. } => "filter",
            Expr::Join { .. } => "join",
            Expr::Mutate { .. } => "mutate",
            Expr::Gather { .. } => "gather",
            Expr::Spread { .. } => "spread",
            Expr::Summarize { .. } => "summarize",
            Expr::Separate { .. } => "separate",
            Expr::Cumsum { .. } => "cumsum",
        }
    }

    pub fn sources(&self) -> Vec<Source> {
        match self {
            Expr::Join { left, right, .. } => vec![*left, *right],
            Expr::Select { src, .. }
            | Expr::Filter { src, .. }
            | Expr::Mutate { src, .. }
            | Expr::Gather { src, .. }
            | Expr::Spread { src, .. }
            | Expr::Summarize { src, .. }
            | Expr::Separate { src, .. }
            | Expr::Cumsum { src, .. } => vec![*src],
        }
    }

    /// Node count: one for the statement plus one per argument slot.
    pub fn size(&self) -> usize {
        match self {
            Expr::Select { .. } | Expr::Filter { .. } | Expr::Gather { .. } => 2,
            Expr::Join { .. } | Expr::Spread { .. } | Expr::Separate { .. } | Expr::Cumsum { .. } => 3,
            Expr::Mutate { .. } | Expr::Summarize { .. } => 4,
        }
    }

    /// Evaluates with `env` resolving sources.
    pub fn eval<'a>(&self, env: &dyn Fn(Source) -> &'a Table) -> Result<Table, EvalError> {
        match self {
            Expr::Select { src, cols } => Ok(env(*src).project(cols)?),
            Expr::Filter { src, pred } => {
                let t = env(*src);
                let keep = pred.compile(t)?;
                Ok(t.filter_rows(|r| keep(r)))
            }
            Expr::Join { left, right, pred } => join(env(*left), env(*right), pred),
            Expr::Mutate {
                src,
                target,
                op,
                lhs,
                rhs,
            } => mutate(env(*src), target, *op, lhs, rhs),
            Expr::Gather {
                src,
                cols,
                key,
                value,
            } => gather(env(*src), cols, key, value),
            Expr::Spread { src, key, value } => spread(env(*src), key, value),
            Expr::Summarize {
                src,
                keys,
                agg,
                col,
                target,
            } => summarize(env(*src), keys, *agg, col, target),
            Expr::Separate { src, col, delim } => separate(env(*src), col, delim),
            Expr::Cumsum {
                src,
                col,
                keys,
                target,
            } => cumsum(env(*src), col, keys, target),
        }
    }

    /// Output schema from input schemas; `None` when it depends on data
    /// (spread).
    pub fn output_schema(
        &self,
        schema: &dyn Fn(Source) -> Option<Vec<String>>,
    ) -> Result<Option<Vec<String>>, EvalError> {
        let need = |s: &[String], c: &str| -> Result<(), EvalError> {
            if s.iter().any(|x| x == c) {
                Ok(())
            } else {
                Err(TableError::UnknownColumn(c.to_string()).into())
            }
        };
        let fresh = |s: &[String], c: &str| -> Result<(), EvalError> {
            if s.iter().any(|x| x == c) {
                Err(EvalError::Exists(c.to_string()))
            } else {
                Ok(())
            }
        };
        let srcs = self.sources();
        let Some(s) = schema(srcs[0]) else {
            return Ok(None);
        };
        Ok(Some(match self {
            Expr::Select { cols, .. } => {
                for c in cols {
                    need(&s, c)?;
                }
                cols.clone()
            }
            Expr::Filter { pred, .. } => {
                for c in pred.columns() {
                    need(&s, c)?;
                }
                s
            }
            Expr::Join { pred, .. } => {
                let Some(r) = schema(srcs[1]) else {
                    return Ok(None);
                };
                let out = cross_columns(&s, &r);
                for c in pred.columns() {
                    need(&out, c)?;
                }
                out
            }
            Expr::Mutate {
                target, lhs, rhs, ..
            } => {
                need(&s, lhs)?;
                if let Operand::Col(c) = rhs {
                    need(&s, c)?;
                }
                fresh(&s, target)?;
                let mut out = s;
                out.push(target.clone());
                out
            }
            Expr::Gather {
                cols, key, value, ..
            } => {
                for c in cols {
                    need(&s, c)?;
                }
                let mut out: Vec<String> = s.into_iter().filter(|c| !cols.contains(c)).collect();
                fresh(&out, key)?;
                fresh(&out, value)?;
                out.push(key.clone());
                out.push(value.clone());
                out
            }
            Expr::Spread { key, value, .. } => {
                need(&s, key)?;
                need(&s, value)?;
                return Ok(None);
            }
            Expr::Summarize {
                keys, col, target, ..
            } => {
                for k in keys {
                    need(&s, k)?;
                }
                need(&s, col)?;
                fresh(keys, target)?;
                let mut out = keys.clone();
                out.push(target.clone());
                out
            }
            Expr::Separate { col, .. } => {
                need(&s, col)?;
                let (a, b) = separate_names(col);
                let mut out = Vec::with_capacity(s.len() + 1);
                for c in s {
                    if c == *col {
                        out.push(a.clone());
                        out.push(b.clone());
                    } else {
                        out.push(c);
                    }
                }
                out
            }
            Expr::Cumsum {
                col, keys, target, ..
            } => {
                need(&s, col)?;
                for k in keys {
                    need(&s, k)?;
                }
                fresh(&s, target)?;
                let mut out = s;
                out.push(target.clone());
                out
            }
        }))
    }
}

pub fn separate_names(col: &str) -> (String, String) {
    (format!("{col}_1"), format!("{col}_2"))
}

fn join(l: &Table, r: &Table, pred: &Pred) -> Result<Table, EvalError> {
    let columns = cross_columns(l.columns(), r.columns());
    // compile against an empty table with the product schema, then test
    // pairs without materializing the whole product
    let shape = Table::new(columns.clone(), Vec::new())?;
    let keep = pred.compile(&shape)?;
    let mut rows = Vec::new();
    let mut buf: Row = Vec::with_capacity(columns.len());
    for a in l.rows() {
        for b in r.rows() {
            buf.clear();
            buf.extend(a.iter().cloned());
            buf.extend(b.iter().cloned());
            if keep(&buf) {
                rows.push(buf.clone());
            }
        }
    }
    Ok(Table::new(columns, rows)?)
}

fn with_column(t: &Table, target: &str, vals: Vec<Value>) -> Result<Table, EvalError> {
    if t.has_column(target) {
        return Err(EvalError::Exists(target.to_string()));
    }
    let mut cols = t.columns().to_vec();
    cols.push(target.to_string());
    let rows = t
        .rows()
        .iter()
        .zip(vals)
        .map(|(r, v)| {
            let mut out = Vec::with_capacity(r.len() + 1);
            out.extend_from_slice(r);
            out.push(v);
            out
        })
        .collect();
    Ok(Table::new(cols, rows)?)
}

fn mutate(t: &Table, target: &str, op: ArithOp, lhs: &str, rhs: &Operand) -> Result<Table, EvalError> {
    let a = t.require_column(lhs)?;
    let b = rhs.resolve(t)?;
    let vals = t
        .rows()
        .iter()
        .map(|r| op.apply(&r[a], b.get(r)))
        .collect::<Result<Vec<_>, _>>()?;
    with_column(t, target, vals)
}

fn gather(t: &Table, cols: &[String], key: &str, value: &str) -> Result<Table, EvalError> {
    let idx = cols
        .iter()
        .map(|c| t.require_column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let ids: Vec<usize> = (0..t.width()).filter(|i| !idx.contains(i)).collect();
    let mut columns: Vec<String> = ids.iter().map(|&i| t.columns()[i].clone()).collect();
    columns.push(key.to_string());
    columns.push(value.to_string());
    let keys: Vec<Value> = cols.iter().map(|c| Value::infer(c)).collect();
    let mut rows = Vec::with_capacity(t.len() * idx.len());
    for r in t.rows() {
        for (k, &i) in keys.iter().zip(&idx) {
            let mut out: Row = Vec::with_capacity(ids.len() + 2);
            out.extend(ids.iter().map(|&j| r[j].clone()));
            out.push(k.clone());
            out.push(r[i].clone());
            rows.push(out);
        }
    }
    Ok(Table::new(columns, rows)?)
}

fn spread(t: &Table, key: &str, value: &str) -> Result<Table, EvalError> {
    let ki = t.require_column(key)?;
    let vi = t.require_column(value)?;
    let ids: Vec<usize> = (0..t.width()).filter(|&i| i != ki && i != vi).collect();
    let mut new_keys: Vec<Value> = Vec::new();
    let mut groups: BTreeMap<Vec<Value>, BTreeMap<Value, Value>> = BTreeMap::new();
    for r in t.rows() {
        let k = r[ki].clone();
        if k.is_null() {
            return Err(EvalError::NullKey);
        }
        if !new_keys.contains(&k) {
            new_keys.push(k.clone());
        }
        let g = groups.entry(ids.iter().map(|&i| r[i].clone()).collect()).or_default();
        if g.insert(k.clone(), r[vi].clone()).is_some() {
            return Err(EvalError::SpreadCollision { key: k.to_string() });
        }
    }
    new_keys.sort();
    let mut columns: Vec<String> = ids.iter().map(|&i| t.columns()[i].clone()).collect();
    for k in &new_keys {
        let name = k.to_string();
        if columns.contains(&name) {
            return Err(EvalError::SpreadClash(name));
        }
        columns.push(name);
    }
    let rows = groups
        .into_iter()
        .map(|(mut id, vals)| {
            for k in &new_keys {
                id.push(vals.get(k).cloned().unwrap_or(Value::Null));
            }
            id
        })
        .collect();
    Ok(Table::new(columns, rows)?)
}

fn summarize(t: &Table, keys: &[String], agg: Agg, col: &str, target: &str) -> Result<Table, EvalError> {
    let ki = keys
        .iter()
        .map(|k| t.require_column(k))
        .collect::<Result<Vec<_>, _>>()?;
    let ci = t.require_column(col)?;
    if keys.iter().any(|k| k == target) {
        return Err(EvalError::Exists(target.to_string()));
    }
    let mut groups: BTreeMap<Vec<Value>, Vec<&Value>> = BTreeMap::new();
    for r in t.rows() {
        let mut key = Vec::with_capacity(ki.len() + 1);
        key.extend(ki.iter().map(|&i| r[i].clone()));
        groups
            .entry(key)
            .or_default()
            .push(&r[ci]);
    }
    let mut columns = keys.to_vec();
    columns.push(target.to_string());
    let mut rows = Vec::with_capacity(groups.len());
    for (mut k, vals) in groups {
        k.push(agg.apply(vals.into_iter())?);
        rows.push(k);
    }
    Ok(Table::new(columns, rows)?)
}

fn separate(t: &Table, col: &str, delim: &str) -> Result<Table, EvalError> {
    let ci = t.require_column(col)?;
    let (a, b) = separate_names(col);
    let mut columns = Vec::with_capacity(t.width() + 1);
    for (i, c) in t.columns().iter().enumerate() {
        if i == ci {
            columns.push(a.clone());
            columns.push(b.clone());
        } else {
            columns.push(c.clone());
        }
    }
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut out = Vec::with_capacity(r.len() + 1);
            for (i, v) in r.iter().enumerate() {
                if i != ci {
                    out.push(v.clone());
                    continue;
                }
                if v.is_null() {
                    out.extend([Value::Null, Value::Null]);
                    continue;
                }
                let s = v.to_string();
                match s.split_once(delim) {
                    Some((x, y)) => out.extend([Value::infer(x), Value::infer(y)]),
                    None => out.extend([v.clone(), Value::Null]),
                }
            }
            out
        })
        .collect();
    Ok(Table::new(columns, rows)?)
}

fn cumsum(t: &Table, col: &str, keys: &[String], target: &str) -> Result<Table, EvalError> {
    let ci = t.require_column(col)?;
    let ki = keys
        .iter()
        .map(|k| t.require_column(k))
        .collect::<Result<Vec<_>, _>>()?;
    let rest: Vec<usize> = (0..t.width()).filter(|i| *i != ci && !ki.contains(i)).collect();
    let mut order: Vec<usize> = (0..t.len()).collect();
    let key = |r: &Row, idx: &[usize]| idx.iter().map(|&i| r[i].clone()).collect::<Vec<_>>();
    let rows = t.rows();
    order.sort_by(|&a, &b| {
        (key(&rows[a], &ki), key(&rows[a], &rest), &rows[a][ci]).cmp(&(
            key(&rows[b], &ki),
            key(&rows[b], &rest),
            &rows[b][ci],
        ))
    });
    let mut vals = vec![Value::Null; t.len()];
    let mut acc = 0.0;
    let mut prev: Option<Vec<Value>> = None;
    for i in order {
        let k = key(&rows[i], &ki);
        if prev.as_ref() != Some(&k) {
            acc = 0.0;
            prev = Some(k);
        }
        let v = &rows[i][ci];
        if !v.is_null() {
            acc = snap(acc + number(v, "cumsum")?);
        }
        vals[i] = Value::num(acc);
    }
    with_column(t, target, vals)
}

/// A straight-line table program; statement `i` defines `t{i+1}` and the
/// last statement is the output.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TableProgram {
    pub inputs: Vec<String>,
    pub stmts: Vec<Expr>,
}

impl TableProgram {
    pub fn size(&self) -> usize {
        self.stmts.iter().map(Expr::size).sum()
    }

    /// Values of every statement, in order.
    pub fn eval_all(&self, inputs: &[&Table]) -> Result<Vec<Table>, EvalError> {
        if self.stmts.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut vals: Vec<Table> = Vec::with_capacity(self.stmts.len());
        for (i, s) in self.stmts.iter().enumerate() {
            for src in s.sources() {
                let ok = match src {
                    Source::Input(k) => k < inputs.len(),
                    Source::Var(j) => j < i,
                };
                if !ok {
                    return Err(EvalError::BadSource {
                        stmt: i,
                        src: self.source_name(src),
                    });
                }
            }
            let t = {
                let env = |src: Source| -> &Table {
                    match src {
                        Source::Input(k) => inputs[k],
                        Source::Var(j) => &vals[j],
                    }
                };
                s.eval(&env)?
            };
            vals.push(t);
        }
        Ok(vals)
    }

    pub fn eval(&self, inputs: &[&Table]) -> Result<Table, EvalError> {
        Ok(self.eval_all(inputs)?.pop().expect("nonempty"))
    }

    pub fn source_name(&self, s: Source) -> String {
        match s {
            Source::Input(k) => self.inputs.get(k).cloned().unwrap_or_else(|| format!("T{}", k + 1)),
            Source::Var(j) => format!("t{}", j + 1),
        }
    }

    fn fmt_stmt(&self, f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
        let n = |s: &Source| self.source_name(*s);
        match e {
            Expr::Select { src, cols } => write!(f, "select({}, {})", n(src), cols.join(", ")),
            Expr::Filter { src, pred } => write!(f, "filter({}, {pred})", n(src)),
            Expr::Join { left, right, pred } => {
                write!(f, "join({}, {}, {pred})", n(left), n(right))
            }
            Expr::Mutate {
                src,
                target,
                op,
                lhs,
                rhs,
            } => write!(f, "mutate({}, {target} = {lhs} {} {rhs})", n(src), op.symbol()),
            Expr::Gather {
                src,
                cols,
                key,
                value,
            } => write!(f, "gather({}, {key}, {value}, [{}])", n(src), cols.join(", ")),
            Expr::Spread { src, key, value } => write!(f, "spread({}, {key}, {value})", n(src)),
            Expr::Summarize {
                src,
                keys,
                agg,
                col,
                target,
            } => write!(
                f,
                "summarize({}, {target} = {}({col}), by = [{}])",
                n(src),
                agg.name(),
                keys.join(", ")
            ),
            Expr::Separate { src, col, delim } => {
                write!(f, "separate({}, {col}, {delim:?})", n(src))
            }
            Expr::Cumsum {
                src,
                col,
                keys,
                target,
            } => write!(
                f,
                "cumsum({}, {target} = cumsum({col}), by = [{}])",
                n(src),
                keys.join(", ")
            ),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Col(c) => f.write_str(c),
            Operand::Const(v @ Value::Text(_)) | Operand::Const(v @ Value::DateTime(_)) => {
                write!(f, "{:?}", v.to_string())
            }
            Operand::Const(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Pred::IsNull(c) => write!(f, "is_null({c})"),
            Pred::And(a, b) => write!(f, "{a} && {b}"),
        }
    }
}

impl fmt::Display for TableProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.stmts.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "t{} = ", i + 1)?;
            self.fmt_stmt(f, s)?;
        }
        Ok(())
    }
}

/// Distinct values of a column, in first-seen order.
pub fn distinct_values(t: &Table, col: usize) -> Vec<Value> {
    let mut seen = HashSet::new();
    t.column_values(col)
        .filter(|v| seen.insert((*v).clone()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> Table {
        Table::from_rows(
            &["ID", "Cond", "A", "Aneg"],
            [
                vec![Value::from(1), 1.into(), 3.into(), 4.into()],
                vec![2.into(), 2.into(), 2.into(), 4.into()],
                vec![3.into(), 1.into(), 1.into(), 1.into()],
                vec![4.into(), 2.into(), 5.into(), 2.into()],
            ],
        )
        .unwrap()
    }

    fn t2() -> Table {
        Table::from_rows(
            &["ID", "Gender"],
            [
                vec![Value::from(1), "M".into()],
                vec![2.into(), "M".into()],
                vec![3.into(), "F".into()],
                vec![4.into(), "F".into()],
            ],
        )
        .unwrap()
    }

    fn running_program() -> TableProgram {
        TableProgram {
            inputs: vec!["T1".into(), "T2".into()],
            stmts: vec![
                Expr::Join {
                    left: Source::Input(0),
                    right: Source::Input(1),
                    pred: Pred::Cmp(Operand::Col("ID.1".into()), CmpOp::Eq, Operand::Col("ID.2".into())),
                },
                Expr::Mutate {
                    src: Source::Var(0),
                    target: "A+Aneg".into(),
                    op: ArithOp::Add,
                    lhs: "A".into(),
                    rhs: Operand::Col("Aneg".into()),
                },
                Expr::Select {
                    src: Source::Var(1),
                    cols: vec!["Cond".into(), "A+Aneg".into(), "Gender".into()],
                },
            ],
        }
    }

    #[test]
    fn running_pipeline() {
        let out = running_program().eval(&[&t1(), &t2()]).unwrap();
        assert_eq!(out.multiplicity(&[1.into(), 7.into(), "M".into()]).unwrap(), 1);
        assert_eq!(out.multiplicity(&[2.into(), 6.into(), "M".into()]).unwrap(), 1);
        assert_eq!(out.len(), 4);
        assert_eq!(
            running_program().to_string(),
            "t1 = join(T1, T2, ID.1 == ID.2)\nt2 = mutate(t1, A+Aneg = A + Aneg)\nt3 = select(t2, Cond, A+Aneg, Gender)"
        );
        assert_eq!(running_program().size(), 9);
    }

    #[test]
    fn summarize_max() {
        let t = Table::from_rows(
            &["c1", "c2"],
            [vec![Value::from("a"), 1.into()], vec!["a".into(), 5.into()], vec!["b".into(), 2.into()]],
        )
        .unwrap();
        let out = summarize(&t, &["c1".into()], Agg::Max, "c2", "m").unwrap();
        let want = Table::from_rows(&["c1", "m"], [vec![Value::from("a"), 5.into()], vec!["b".into(), 2.into()]]).unwrap();
        assert_eq!(out, want);
    }

    #[test]
    fn gather_spread_round_trip() {
        let t = Table::from_rows(
            &["id", "a", "b"],
            [vec![Value::from(1), 10.into(), 20.into()], vec![2.into(), 30.into(), Value::Null]],
        )
        .unwrap();
        let g = gather(&t, &["a".into(), "b".into()], "k", "v").unwrap();
        assert_eq!(g.len(), 4);
        let s = spread(&g, "k", "v").unwrap();
        assert_eq!(s, t);
        let dup = Table::from_rows(&["k", "v"], [vec![Value::from("a"), 1.into()], vec!["a".into(), 2.into()]]).unwrap();
        assert!(matches!(spread(&dup, "k", "v"), Err(EvalError::SpreadCollision { .. })));
    }

    #[test]
    fn errors_are_typed() {
        let t = Table::from_rows(&["a", "b"], [vec![Value::from(1), 0.into()], vec!["x".into(), 1.into()]]).unwrap();
        assert_eq!(mutate(&t, "q", ArithOp::Div, "a", &Operand::Col("b".into())), Err(EvalError::DivByZero));
        let t = t.filter_rows(|r| r[1] == Value::num(1.0));
        assert!(matches!(
            mutate(&t, "q", ArithOp::Add, "a", &Operand::Col("b".into())),
            Err(EvalError::NonNumeric { .. })
        ));
        assert!(matches!(
            mutate(&t, "a", ArithOp::Concat, "a", &Operand::Col("b".into())),
            Err(EvalError::Exists(_))
        ));
    }

    #[test]
    fn separate_and_cumsum() {
        let t = Table::from_rows(&["d", "v"], [vec![Value::from("2020-Q1"), 1.into()], vec!["none".into(), 2.into()]]).unwrap();
        let s = separate(&t, "d", "-").unwrap();
        assert_eq!(s.columns(), ["d_1", "d_2", "v"]);
        assert!(s.rows().iter().any(|r| r[0] == Value::num(2020.0) && r[1] == Value::text("Q1")));
        assert!(s.rows().iter().any(|r| r[1].is_null()));

        let t = Table::from_rows(
            &["g", "x", "v"],
            [
                vec![Value::from("a"), 2.into(), 5.into()],
                vec!["a".into(), 1.into(), 3.into()],
                vec!["b".into(), 1.into(), 4.into()],
            ],
        )
        .unwrap();
        let c = cumsum(&t, "v", &["g".into()], "cs").unwrap();
        assert_eq!(c.multiplicity(&["a".into(), 2.into(), 5.into(), 8.into()]).unwrap(), 1);
        assert_eq!(c.multiplicity(&["b".into(), 1.into(), 4.into(), 4.into()]).unwrap(), 1);
    }

    #[test]
    fn schema_matches_eval() {
        let p = running_program();
        let inputs = [t1(), t2()];
        let vals = p.eval_all(&[&inputs[0], &inputs[1]]).unwrap();
        for (i, s) in p.stmts.iter().enumerate() {
            let schema = |src: Source| -> Option<Vec<String>> {
                Some(match src {
                    Source::Input(k) => inputs[k].columns().to_vec(),
                    Source::Var(j) => vals[j].columns().to_vec(),
                })
            };
            assert_eq!(s.output_schema(&schema).unwrap().unwrap(), vals[i].columns());
        }
    }
}
