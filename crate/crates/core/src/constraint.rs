//! Intermediate specifications over a visual program's input table, and the
//! inclusion constraints used to refute partial table programs.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::table::{ColumnMapping, Table};
use crate::value::{approx_f64, Value};

/// Ground checks whose right side exceeds this many cells are skipped.
pub const GROUND_CHECK_CELL_CAP: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("column mapping does not bind spec column `{0}`")]
    Unbound(String),
    #[error("mapped column `{0}` is not in the table")]
    MissingColumn(String),
}

/// One bar (or stacked-area corner) the stack geometry must reproduce.
#[derive(Clone, Debug, PartialEq)]
pub struct StackReq {
    pub x: Value,
    pub color: Option<Value>,
    pub facets: Vec<Value>,
    pub base: f64,
}

/// One sketched segment that must join consecutive rows of its group.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSeg {
    pub group: Vec<Value>,
    pub left: Vec<Value>,
    pub right: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SideCondition {
    /// Each required bar sits exactly on the sum of the heights below it in
    /// its stack. Also requires the stack layout to be renderable: numeric
    /// heights and unique (x, color, facets) keys.
    StackedSum {
        x: String,
        h: String,
        color: Option<String>,
        facets: Vec<String>,
        bars: Vec<StackReq>,
    },
    /// No row of a segment's group sorts strictly between its endpoints,
    /// comparing `left_key` against the left endpoint and `right_key`
    /// against the right one.
    LineGap {
        group: Vec<String>,
        left_key: Vec<String>,
        right_key: Vec<String>,
        segments: Vec<GapSeg>,
    },
}

impl SideCondition {
    pub fn columns(&self) -> Vec<&str> {
        match self {
            SideCondition::StackedSum {
                x, h, color, facets, ..
            } => {
                let mut v = vec![x.as_str(), h.as_str()];
                v.extend(color.as_deref());
                v.extend(facets.iter().map(String::as_str));
                v
            }
            SideCondition::LineGap {
                group,
                left_key,
                right_key,
                ..
            } => group
                .iter()
                .chain(left_key)
                .chain(right_key)
                .map(String::as_str)
                .collect(),
        }
    }

    pub fn rename(&self, m: &ColumnMapping) -> SideCondition {
        let r = |s: &String| m.apply(s).to_string();
        match self {
            SideCondition::StackedSum {
                x,
                h,
                color,
                facets,
                bars,
            } => SideCondition::StackedSum {
                x: r(x),
                h: r(h),
                color: color.as_ref().map(r),
                facets: facets.iter().map(r).collect(),
                bars: bars.clone(),
            },
            SideCondition::LineGap {
                group,
                left_key,
                right_key,
                segments,
            } => SideCondition::LineGap {
                group: group.iter().map(r).collect(),
                left_key: left_key.iter().map(r).collect(),
                right_key: right_key.iter().map(r).collect(),
                segments: segments.clone(),
            },
        }
    }

    pub fn holds(&self, t: &Table, m: &ColumnMapping) -> Result<bool, SpecError> {
        let idx = |c: &String| -> Result<usize, SpecError> {
            let name = m.get(c).ok_or_else(|| SpecError::Unbound(c.clone()))?;
            t.column_index(name)
                .ok_or_else(|| SpecError::MissingColumn(name.to_string()))
        };
        match self {
            SideCondition::StackedSum {
                x,
                h,
                color,
                facets,
                bars,
            } => {
                let xi = idx(x)?;
                let hi = idx(h)?;
                let ci = color.as_ref().map(idx).transpose()?;
                let fi = facets.iter().map(idx).collect::<Result<Vec<_>, _>>()?;
                // (facets, x) -> [(color, height)]
                let mut stacks: HashMap<(Vec<&Value>, &Value), Vec<(Option<&Value>, f64)>> =
                    HashMap::new();
                for r in t.rows() {
                    if r[xi].is_null() {
                        continue;
                    }
                    let Some(hv) = r[hi].as_f64() else {
                        return Ok(false);
                    };
                    let key = (fi.iter().map(|&i| &r[i]).collect(), &r[xi]);
                    let c = ci.map(|i| &r[i]);
                    let stack = stacks.entry(key).or_default();
                    if stack.iter().any(|(c2, _)| *c2 == c) {
                        return Ok(false);
                    }
                    stack.push((c, hv));
                }
                for b in bars {
                    let key = (b.facets.iter().collect::<Vec<_>>(), &b.x);
                    let below: f64 = stacks
                        .get(&key)
                        .map(|s| {
                            s.iter()
                                .filter(|(c, _)| match (c, &b.color) {
                                    (Some(c), Some(bc)) => *c < bc,
                                    _ => false,
                                })
                                .map(|(_, h)| h)
                                .sum()
                        })
                        .unwrap_or(0.0);
                    if !approx_f64(below, b.base) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SideCondition::LineGap {
                group,
                left_key,
                right_key,
                segments,
            } => {
                let gi = group.iter().map(idx).collect::<Result<Vec<_>, _>>()?;
                let li = left_key.iter().map(idx).collect::<Result<Vec<_>, _>>()?;
                let ri = right_key.iter().map(idx).collect::<Result<Vec<_>, _>>()?;
                for r in t.rows() {
                    if ri.iter().any(|&i| r[i].is_null()) {
                        continue;
                    }
                    for s in segments {
                        if !gi.iter().zip(&s.group).all(|(&i, v)| &r[i] == v) {
                            continue;
                        }
                        let after_left = li.iter().map(|&i| &r[i]).cmp(s.left.iter()).is_gt();
                        let before_right = ri.iter().map(|&i| &r[i]).cmp(s.right.iter()).is_lt();
                        if after_left && before_right {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }
}

/// ψ: every table must be contained in the visual program's input (up to
/// projection), and every side condition must hold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecConstraint {
    pub tables: Vec<Table>,
    pub side: Vec<SideCondition>,
}

impl SpecConstraint {
    /// Abstract column names mentioned by the inclusion tables, in first
    /// occurrence order.
    pub fn columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.tables {
            for c in t.columns() {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        for s in &self.side {
            for c in s.columns() {
                if !out.iter().any(|o| o == c) {
                    out.push(c.to_string());
                }
            }
        }
        out
    }

    pub fn rename(&self, m: &ColumnMapping) -> SpecConstraint {
        SpecConstraint {
            tables: self
                .tables
                .iter()
                .map(|t| t.rename_columns(|c| m.apply(c).to_string()))
                .collect(),
            side: self.side.iter().map(|s| s.rename(m)).collect(),
        }
    }

    /// Inclusion part only.
    pub fn inclusions_hold(&self, t: &Table, m: &ColumnMapping) -> Result<bool, SpecError> {
        for spec in &self.tables {
            let mut idx = Vec::with_capacity(spec.width());
            for c in spec.columns() {
                let name = m.get(c).ok_or_else(|| SpecError::Unbound(c.clone()))?;
                idx.push(
                    t.column_index(name)
                        .ok_or_else(|| SpecError::MissingColumn(name.to_string()))?,
                );
            }
            if !spec.bag_subset(&t.project_indices(&idx)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether `t`, with spec columns renamed by `m`, satisfies ψ.
    pub fn eval(&self, t: &Table, m: &ColumnMapping) -> Result<bool, SpecError> {
        if !self.inclusions_hold(t, m)? {
            return Ok(false);
        }
        for s in &self.side {
            if !s.holds(t, m)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn eval_spec(psi: &SpecConstraint, t: &Table, m: &ColumnMapping) -> Result<bool, SpecError> {
    psi.eval(t, m)
}

/// Inclusion relations, strongest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    /// Positional bag containment on equal schemas.
    Sub,
    /// Bag containment after projecting the right side onto the left
    /// side's column names.
    Named,
    /// Containment after projecting the right side onto some injective
    /// choice of columns.
    Proj,
}

impl Rel {
    pub fn compose(self, other: Rel) -> Rel {
        self.max(other)
    }

    pub fn holds(self, small: &Table, big: &Table) -> bool {
        match self {
            Rel::Sub => small.bag_subset(big),
            Rel::Named => small.named_subset(big),
            Rel::Proj => small.proj_subset_exists(big),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Rel::Sub => "⊆",
            Rel::Named => "⊆ₙ",
            Rel::Proj => "⊆◇",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Term {
    Var(usize),
    Table(Arc<Table>),
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
}

impl Atom {
    pub fn upper(var: usize, rel: Rel, t: Arc<Table>) -> Atom {
        Atom {
            lhs: Term::Var(var),
            rel,
            rhs: Term::Table(t),
        }
    }

    pub fn lower(t: Arc<Table>, rel: Rel, var: usize) -> Atom {
        Atom {
            lhs: Term::Table(t),
            rel,
            rhs: Term::Var(var),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "t{v}"),
            Term::Table(t) => write!(f, "{}", t.to_json()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sat {
    /// Not refuted.
    Maybe,
    Unsat,
}

/// Memo of ground checks keyed by table identity.
#[derive(Default)]
pub struct SatCache {
    ground: HashMap<(usize, usize, Rel), bool>,
    pins: Vec<Arc<Table>>,
    pub checks: u64,
}

impl SatCache {
    /// Forgets memoized checks; the running check count is kept.
    pub fn clear(&mut self) {
        self.ground.clear();
        self.pins.clear();
    }

    fn ground(&mut self, small: &Arc<Table>, big: &Arc<Table>, rel: Rel) -> bool {
        if big.cells() > GROUND_CHECK_CELL_CAP {
            return true;
        }
        let key = (Arc::as_ptr(small) as usize, Arc::as_ptr(big) as usize, rel);
        if let Some(&r) = self.ground.get(&key) {
            return r;
        }
        self.checks += 1;
        let r = rel.holds(small, big);
        // keep both tables alive for as long as their addresses are keys
        self.ground.insert(key, r);
        self.pins.push(small.clone());
        self.pins.push(big.clone());
        r
    }
}

/// Closes the atoms under transitivity (through variables) and reports a
/// contradiction when some derived ground inclusion fails. Incomplete by
/// design: `Maybe` only means no refutation was found.
pub fn check_sat(atoms: &[Atom], cache: &mut SatCache) -> Sat {
    let mut lower: HashMap<usize, Vec<(Arc<Table>, Rel)>> = HashMap::new();
    let mut upper: HashMap<usize, Vec<(Arc<Table>, Rel)>> = HashMap::new();
    let mut edges: Vec<(usize, Rel, usize)> = Vec::new();
    for a in atoms {
        match (&a.lhs, &a.rhs) {
            (Term::Table(s), Term::Table(b)) => {
                if !cache.ground(s, b, a.rel) {
                    return Sat::Unsat;
                }
            }
            (Term::Table(s), Term::Var(v)) => lower.entry(*v).or_default().push((s.clone(), a.rel)),
            (Term::Var(v), Term::Table(b)) => upper.entry(*v).or_default().push((b.clone(), a.rel)),
            (Term::Var(x), Term::Var(y)) => edges.push((*x, a.rel, *y)),
        }
    }
    // push lower bounds forward along variable edges until fixpoint
    let mut changed = !edges.is_empty();
    while changed {
        changed = false;
        for &(x, rel, y) in &edges {
            let from: Vec<(Arc<Table>, Rel)> = lower.get(&x).cloned().unwrap_or_default();
            let into = lower.entry(y).or_default();
            for (t, r) in from {
                let r2 = r.compose(rel);
                let dominated = into
                    .iter()
                    .any(|(t2, r3)| Arc::ptr_eq(t2, &t) && *r3 <= r2);
                if !dominated {
                    into.push((t, r2));
                    changed = true;
                }
            }
        }
    }
    for (v, lows) in &lower {
        let Some(ups) = upper.get(v) else { continue };
        for (l, r1) in lows {
            for (u, r2) in ups {
                if !cache.ground(l, u, r1.compose(*r2)) {
                    return Sat::Unsat;
                }
            }
        }
    }
    Sat::Maybe
}
