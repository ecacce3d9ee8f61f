#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sketchviz::dsl::{Agg, ArithOp, CmpOp, Expr, Operand, Pred, Source, TableProgram};
use sketchviz::{Channel, Layer, LayerKind, Mark, Orient, Table, Value, VizProgram};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Small ints or a few short strings, so collisions and duplicates are common.
pub fn random_value(rng: &mut ChaCha8Rng, text: bool) -> Value {
    if text {
        Value::from(["a", "b", "c", "d"][rng.gen_range(0..4)])
    } else {
        Value::from(rng.gen_range(0..5))
    }
}

pub fn random_table(rng: &mut ChaCha8Rng, prefix: &str, max_cols: usize, max_rows: usize) -> Table {
    let w = rng.gen_range(1..=max_cols);
    let h = rng.gen_range(0..=max_rows);
    let text: Vec<bool> = (0..w).map(|_| rng.gen_bool(0.3)).collect();
    let cols: Vec<String> = (0..w).map(|i| format!("{prefix}{i}")).collect();
    let rows = (0..h)
        .map(|_| text.iter().map(|&t| random_value(rng, t)).collect())
        .collect();
    Table::new(cols, rows).unwrap()
}

/// A numeric table with an id column and up to three measures.
pub fn numeric_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Table {
    let mut names = vec!["k".to_string()];
    names.extend((1..cols).map(|i| format!("m{i}")));
    let groups = ["p", "q", "r"];
    let data = (0..rows)
        .map(|_| {
            let mut r = vec![Value::from(groups[rng.gen_range(0..groups.len())])];
            r.extend((1..cols).map(|_| Value::from(rng.gen_range(1..9))));
            r
        })
        .collect();
    Table::new(names, data).unwrap()
}

/// At most 6 rows by 4 columns.
pub fn desk_table(rng: &mut ChaCha8Rng) -> Table {
    let rows = rng.gen_range(2..=6);
    let cols = rng.gen_range(2..=4);
    numeric_table(rng, rows, cols)
}

pub fn numeric_columns(t: &Table) -> Vec<String> {
    (0..t.width())
        .filter(|&i| !t.is_empty() && t.column_values(i).all(|v| matches!(v, Value::Num(_))))
        .map(|i| t.columns()[i].clone())
        .collect()
}

pub fn text_columns(t: &Table) -> Vec<String> {
    (0..t.width())
        .filter(|&i| t.column_values(i).all(|v| matches!(v, Value::Text(_))))
        .map(|i| t.columns()[i].clone())
        .collect()
}

/// One random statement over `t` that needs no constants.
pub fn random_stmt(rng: &mut ChaCha8Rng, t: &Table, src: Source, k: usize) -> Option<Expr> {
    let nums = numeric_columns(t);
    let texts = text_columns(t);
    let pick = |rng: &mut ChaCha8Rng, v: &[String]| v.choose(rng).cloned();
    match rng.gen_range(0..4) {
        0 if nums.len() >= 2 => {
            let mut two: Vec<String> = nums.choose_multiple(rng, 2).cloned().collect();
            two.sort();
            let op = [ArithOp::Add, ArithOp::Sub][rng.gen_range(0..2)];
            Some(Expr::Mutate {
                src,
                target: format!("__m{k}"),
                op,
                lhs: two[0].clone(),
                rhs: Operand::Col(two[1].clone()),
            })
        }
        1 if !nums.is_empty() && !texts.is_empty() => Some(Expr::Summarize {
            src,
            keys: vec![pick(rng, &texts)?],
            agg: [Agg::Sum, Agg::Max, Agg::Count][rng.gen_range(0..3)],
            col: pick(rng, &nums)?,
            target: format!("__s{k}"),
        }),
        2 if nums.len() >= 2 && t.width() > 2 => Some(Expr::Gather {
            src,
            cols: nums.iter().take(2).cloned().collect(),
            key: format!("__k{k}"),
            value: format!("__v{k}"),
        }),
        3 if !nums.is_empty() => Some(Expr::Cumsum {
            src,
            col: pick(rng, &nums)?,
            keys: Vec::new(),
            target: format!("__c{k}"),
        }),
        _ => None,
    }
}

/// A random program of up to `max_stmts` statements followed by nothing;
/// callers pick output columns themselves.
pub fn random_program(rng: &mut ChaCha8Rng, input: &Table, max_stmts: usize) -> (TableProgram, Table) {
    let mut prog = TableProgram {
        inputs: vec!["T".into()],
        stmts: Vec::new(),
    };
    let mut cur = input.clone();
    let want = rng.gen_range(0..=max_stmts);
    let mut tries = 0;
    while prog.stmts.len() < want && tries < 20 {
        tries += 1;
        let k = prog.stmts.len();
        let src = if k == 0 { Source::Input(0) } else { Source::Var(k - 1) };
        let Some(e) = random_stmt(rng, &cur, src, k + 1) else { continue };
        let mut next = prog.clone();
        next.stmts.push(e);
        if let Ok(t) = next.eval(&[input]) {
            if !t.is_empty() {
                prog = next;
                cur = t;
            }
        }
    }
    (prog, cur)
}

/// A single-layer program of size at most 6 over columns of `t`.
pub fn random_viz(rng: &mut ChaCha8Rng, t: &Table) -> Option<VizProgram> {
    let nums = numeric_columns(t);
    let all: Vec<String> = t.columns().to_vec();
    let texts = text_columns(t);
    if nums.is_empty() {
        return None;
    }
    let x = all.choose(rng)?.clone();
    let y = nums.iter().find(|c| **c != x).or(nums.first())?.clone();
    let color = texts.iter().find(|c| **c != x && **c != y).cloned();
    let l = match rng.gen_range(0..4) {
        0 => Layer::new(LayerKind::Scatter(Mark::Point)),
        1 => Layer::new(LayerKind::Line),
        2 => Layer::new(LayerKind::Bar),
        _ => Layer::new(LayerKind::StackedBar(Orient::Vertical)),
    };
    let stacked = matches!(l.kind(), LayerKind::StackedBar(_));
    let mut l = l.with("x", Channel::col(&x)).with(if stacked { "h" } else { "y" }, Channel::col(&y));
    if x == y {
        return None;
    }
    if let Some(c) = color {
        if rng.gen_bool(0.5) || stacked {
            l = l.with("color", Channel::col(c));
        }
    }
    let v = VizProgram::layer(l);
    (v.size() <= 6).then_some(v)
}

pub fn cmp_ops() -> [CmpOp; 6] {
    CmpOp::ALL
}

pub fn eq_pred(a: &str, b: &str) -> Pred {
    Pred::Cmp(Operand::Col(a.into()), CmpOp::Eq, Operand::Col(b.into()))
}
