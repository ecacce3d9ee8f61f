//! Tables with bag semantics and the two containment relations:
//! plain bag containment (`⊆`) and projective containment (`⊆◇`), where the
//! larger table may additionally drop columns.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

pub type Row = Vec<Value>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row} has {found} values but the schema has {expected} columns")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("tuple of arity {found} does not fit a table of arity {expected}")]
    TupleArity { expected: usize, found: usize },
}

/// A schema-carrying, unordered bag of rows.
#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Row>) -> Result<Table, TableError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(TableError::DuplicateColumn(c.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(TableError::Arity {
                    row: i,
                    expected: columns.len(),
                    found: r.len(),
                });
            }
        }
        Ok(Table { columns, rows })
    }

    /// Convenience constructor for literals in tests and examples.
    pub fn from_rows<C, R, V>(columns: &[C], rows: R) -> Result<Table, TableError>
    where
        C: AsRef<str>,
        R: IntoIterator<Item = Vec<V>>,
        V: Into<Value>,
    {
        Table::new(
            columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows.into_iter()
                .map(|r| r.into_iter().map(Into::into).collect())
                .collect(),
        )
    }

    pub fn empty(columns: Vec<String>) -> Table {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn cells(&self) -> usize {
        self.rows.len() * self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize, TableError> {
        self.column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn column_values(&self, idx: usize) -> impl Iterator<Item = &Value> + '_ {
        self.rows.iter().map(move |r| &r[idx])
    }

    /// Number of occurrences of `row` in the bag.
    pub fn multiplicity(&self, row: &[Value]) -> Result<usize, TableError> {
        if row.len() != self.width() {
            return Err(TableError::TupleArity {
                expected: self.width(),
                found: row.len(),
            });
        }
        Ok(self.rows.iter().filter(|r| r.as_slice() == row).count())
    }

    pub(crate) fn row_counts(&self) -> HashMap<&[Value], usize> {
        let mut counts = HashMap::with_capacity(self.rows.len());
        for r in &self.rows {
            *counts.entry(r.as_slice()).or_insert(0) += 1;
        }
        counts
    }

    /// Bag containment `self ⊆ other`, comparing columns by position.
    /// Tables of different arity are never contained in one another.
    pub fn bag_subset(&self, other: &Table) -> bool {
        if self.width() != other.width() {
            return false;
        }
        if self.len() > other.len() {
            return false;
        }
        let mine = self.row_counts();
        let theirs = other.row_counts();
        mine.iter()
            .all(|(r, n)| theirs.get(r).is_some_and(|m| n <= m))
    }

    /// Equality as bags with equal schemas.
    pub fn bag_eq(&self, other: &Table) -> bool {
        self.columns == other.columns
            && self.len() == other.len()
            && self.bag_subset(other)
    }

    /// All injective column mappings witnessing `self ⊆◇ other`.
    pub fn proj_subset(&self, other: &Table) -> Vec<ColumnMapping> {
        let mut out = Vec::new();
        ProjSearch::new(self, other).run(&mut |m| {
            out.push(m);
            true
        });
        out
    }

    /// Whether `self ⊆◇ other` holds for some injective mapping.
    pub fn proj_subset_exists(&self, other: &Table) -> bool {
        let mut found = false;
        ProjSearch::new(self, other).run(&mut |_| {
            found = true;
            false
        });
        found
    }

    /// `self ⊆ other[cols(self)]` where the columns are matched by name.
    pub fn named_subset(&self, other: &Table) -> bool {
        let mut idx = Vec::with_capacity(self.width());
        for c in &self.columns {
            match other.column_index(c) {
                Some(i) => idx.push(i),
                None => return false,
            }
        }
        self.bag_subset(&other.project_indices(&idx))
    }

    pub fn project<S: AsRef<str>>(&self, cols: &[S]) -> Result<Table, TableError> {
        let idx = cols
            .iter()
            .map(|c| self.require_column(c.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.project_indices(&idx))
    }

    pub fn project_except<S: AsRef<str>>(&self, cols: &[S]) -> Result<Table, TableError> {
        for c in cols {
            self.require_column(c.as_ref())?;
        }
        let idx: Vec<usize> = (0..self.width())
            .filter(|&i| !cols.iter().any(|c| c.as_ref() == self.columns[i]))
            .collect();
        Ok(self.project_indices(&idx))
    }

    pub fn project_indices(&self, idx: &[usize]) -> Table {
        Table {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        }
    }

    /// Cartesian product. Column names present on both sides are suffixed
    /// with `.1` / `.2` according to the side they come from.
    pub fn cross_product(&self, other: &Table) -> Table {
        let columns = cross_columns(&self.columns, &other.columns);
        let mut rows = Vec::with_capacity(self.len() * other.len());
        for a in &self.rows {
            for b in &other.rows {
                let mut r = Vec::with_capacity(columns.len());
                r.extend(a.iter().cloned());
                r.extend(b.iter().cloned());
                rows.push(r);
            }
        }
        Table { columns, rows }
    }

    pub fn rename_columns(&self, rename: impl Fn(&str) -> String) -> Table {
        Table {
            columns: self.columns.iter().map(|c| rename(c)).collect(),
            rows: self.rows.clone(),
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(&Row) -> bool) -> Table {
        Table {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Drops duplicate rows, keeping first occurrences.
    pub fn distinct(&self) -> Table {
        let mut seen = HashSet::new();
        Table {
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| seen.insert(r.as_slice()))
                .cloned()
                .collect(),
        }
    }

    /// Rows in canonical (sorted) order.
    pub fn sorted_rows(&self) -> Vec<Row> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "columns": self.columns,
            "rows": self.rows.iter()
                .map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    /// Rows as `{column: value}` records, the shape Vega-Lite expects.
    pub fn to_records(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut obj = serde_json::Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        obj.insert(c.clone(), v.to_json());
                    }
                    serde_json::Value::Object(obj)
                })
                .collect(),
        )
    }
}

pub(crate) fn cross_columns(left: &[String], right: &[String]) -> Vec<String> {
    let clash: HashSet<&String> = left.iter().filter(|c| right.contains(c)).collect();
    let mut out: Vec<String> = Vec::with_capacity(left.len() + right.len());
    let mut push = |name: String| {
        let mut n = name;
        while out.contains(&n) {
            n.push('\'');
        }
        out.push(n);
    };
    for c in left {
        push(if clash.contains(c) { format!("{c}.1") } else { c.clone() });
    }
    for c in right {
        push(if clash.contains(c) { format!("{c}.2") } else { c.clone() });
    }
    out
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.bag_eq(other)
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.columns.join(" | "))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join(" | "))?;
        }
        Ok(())
    }
}

/// Injective assignment from (possibly abstract) column names to concrete
/// column names, kept in domain order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnMapping {
    pairs: Vec<(String, String)>,
}

impl ColumnMapping {
    pub fn new() -> ColumnMapping {
        ColumnMapping::default()
    }

    pub fn from_pairs<A: Into<String>, B: Into<String>>(
        pairs: impl IntoIterator<Item = (A, B)>,
    ) -> ColumnMapping {
        ColumnMapping {
            pairs: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn get(&self, from: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(a, _)| a == from)
            .map(|(_, b)| b.as_str())
    }

    pub fn insert(&mut self, from: impl Into<String>, to: impl Into<String>) {
        let from = from.into();
        let to = to.into();
        if let Some(p) = self.pairs.iter_mut().find(|(a, _)| *a == from) {
            p.1 = to;
        } else {
            self.pairs.push((from, to));
        }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(a, _)| a.as_str())
    }

    pub fn image(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(_, b)| b.as_str())
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = HashSet::new();
        self.image().all(|b| seen.insert(b))
    }

    pub fn covers<S: AsRef<str>>(&self, names: &[S]) -> bool {
        names.iter().all(|n| self.get(n.as_ref()).is_some())
    }

    /// Maps `name` when it is in the domain, otherwise returns it unchanged.
    pub fn apply<'a>(&'a self, name: &'a str) -> &'a str {
        self.get(name).unwrap_or(name)
    }
}

impl Serialize for ColumnMapping {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = serializer.serialize_map(Some(self.pairs.len()))?;
        for (a, b) in &self.pairs {
            m.serialize_entry(a, b)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for ColumnMapping {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = serde_json::Map::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(m.len());
        for (k, v) in m {
            match v {
                serde_json::Value::String(s) => pairs.push((k, s)),
                other => {
                    return Err(serde::de::Error::custom(format!(
                        "mapping target for `{k}` must be a string, found {other}"
                    )))
                }
            }
        }
        Ok(ColumnMapping { pairs })
    }
}

impl fmt::Display for ColumnMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(|(a, b)| format!("{a}↦{b}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Backtracking search for `⊆◇` witnesses. Candidate columns are pre-filtered
/// by per-column value-multiset containment and every partial assignment is
/// checked for containment of the projected prefix.
struct ProjSearch<'a> {
    small: &'a Table,
    big: &'a Table,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
}

impl<'a> ProjSearch<'a> {
    fn new(small: &'a Table, big: &'a Table) -> Self {
        let big_counts: Vec<HashMap<&Value, usize>> =
            (0..big.width()).map(|j| value_counts(big, j)).collect();
        let candidates: Vec<Vec<usize>> = (0..small.width())
            .map(|i| {
                let mine = value_counts(small, i);
                (0..big.width())
                    .filter(|&j| {
                        mine.iter()
                            .all(|(v, n)| big_counts[j].get(v).is_some_and(|m| n <= m))
                    })
                    .collect()
            })
            .collect();
        let mut order: Vec<usize> = (0..small.width()).collect();
        order.sort_by_key(|&i| candidates[i].len());
        ProjSearch {
            small,
            big,
            order,
            candidates,
        }
    }

    /// Calls `emit` for each witness until it returns false.
    fn run(&self, emit: &mut dyn FnMut(ColumnMapping) -> bool) {
        if self.small.width() > self.big.width() || self.small.len() > self.big.len() {
            return;
        }
        let mut assign = vec![usize::MAX; self.small.width()];
        let mut used = vec![false; self.big.width()];
        self.step(0, &mut assign, &mut used, emit);
    }

    fn step(
        &self,
        depth: usize,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        emit: &mut dyn FnMut(ColumnMapping) -> bool,
    ) -> bool {
        if depth == self.order.len() {
            let m = ColumnMapping {
                pairs: (0..self.small.width())
                    .map(|i| {
                        (
                            self.small.columns[i].clone(),
                            self.big.columns[assign[i]].clone(),
                        )
                    })
                    .collect(),
            };
            return emit(m);
        }
        let col = self.order[depth];
        for &j in &self.candidates[col] {
            if used[j] {
                continue;
            }
            assign[col] = j;
            used[j] = true;
            let ok = depth == 0 || self.prefix_contained(depth + 1, assign);
            let keep_going = !ok || self.step(depth + 1, assign, used, emit);
            used[j] = false;
            assign[col] = usize::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }

    fn prefix_contained(&self, upto: usize, assign: &[usize]) -> bool {
        let cols = &self.order[..upto];
        let mut need: HashMap<Vec<&Value>, isize> = HashMap::new();
        for r in &self.small.rows {
            *need.entry(cols.iter().map(|&c| &r[c]).collect()).or_insert(0) += 1;
        }
        for r in &self.big.rows {
            let key: Vec<&Value> = cols.iter().map(|&c| &r[assign[c]]).collect();
            if let Some(n) = need.get_mut(&key) {
                *n -= 1;
            }
        }
        need.values().all(|&n| n <= 0)
    }
}

fn value_counts(t: &Table, col: usize) -> HashMap<&Value, usize> {
    let mut m = HashMap::new();
    for v in t.column_values(col) {
        *m.entry(v).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(cols: &[&str], rows: Vec<Vec<Value>>) -> Table {
        Table::new(cols.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    fn v(x: i64) -> Value {
        Value::from(x)
    }

    #[test]
    fn multiplicity_counts_duplicates() {
        let tab = t(
            &["a", "g"],
            vec![vec![v(1), "M".into()], vec![v(1), "M".into()], vec![v(2), "F".into()]],
        );
        assert_eq!(tab.multiplicity(&[v(1), "M".into()]).unwrap(), 2);
        assert_eq!(tab.multiplicity(&[v(3), "M".into()]).unwrap(), 0);
        assert!(tab.multiplicity(&[v(3)]).is_err());
    }

    #[test]
    fn bag_subset_respects_multiplicity() {
        let twice = t(&["a"], vec![vec![v(1)], vec![v(1)]]);
        let once = t(&["a"], vec![vec![v(1)]]);
        assert!(!twice.bag_subset(&once));
        assert!(once.bag_subset(&twice));
        assert!(Table::empty(vec!["a".into()]).bag_subset(&once));
        assert!(!once.bag_subset(&t(&["a", "b"], vec![vec![v(1), v(2)]])));
    }

    #[test]
    fn proj_subset_single_witness() {
        let small = t(&["c1"], vec![vec![v(1)]]);
        let big = t(&["a", "b"], vec![vec![v(1), v(3)], vec![v(2), v(4)]]);
        let ms = small.proj_subset(&big);
        assert_eq!(ms, vec![ColumnMapping::from_pairs([("c1", "a")])]);
    }

    #[test]
    fn proj_subset_empty_table() {
        let small = Table::empty(vec![]);
        let big = t(&["a"], vec![vec![v(1)]]);
        assert_eq!(small.proj_subset(&big), vec![ColumnMapping::new()]);
        let wide = t(&["a", "b"], vec![]);
        assert!(wide.proj_subset(&t(&["a"], vec![])).is_empty());
    }

    #[test]
    fn projection_and_cross() {
        let a = t(&["id", "x"], vec![vec![v(1), v(2)], vec![v(3), v(4)], vec![v(5), v(6)]]);
        assert_eq!(a.project(&["id", "x"]).unwrap(), a);
        assert!(a.project(&["nope"]).is_err());
        let b = t(&["id", "y"], vec![vec![v(1), v(0)], vec![v(2), v(0)]]);
        let c = a.cross_product(&b);
        assert_eq!(c.len(), 6);
        assert_eq!(c.columns(), ["id.1", "x", "id.2", "y"]);
        let e = a.project_except(&["id"]).unwrap();
        assert_eq!(e.columns(), ["x"]);
    }

    #[test]
    fn named_subset_uses_names() {
        let small = t(&["x", "id"], vec![vec![v(2), v(1)]]);
        let big = t(&["id", "x"], vec![vec![v(1), v(2)]]);
        assert!(small.named_subset(&big));
        let wrong = t(&["x", "id"], vec![vec![v(1), v(2)]]);
        assert!(!wrong.named_subset(&big));
        assert!(wrong.proj_subset_exists(&big));
    }
}
