//! Builds a three-statement wrangling script by hand and prints every
//! intermediate table.
//!
//!     cargo run --example table_programs

use sketchviz::dsl::{Agg, ArithOp, Expr, Operand, Source, TableProgram};
use sketchviz::io::read_csv_str;
use sketchviz::Table;

fn main() {
    let sales = read_csv_str("store,q1,q2\nnorth,10,14\nsouth,7,9\neast,12,3\n").unwrap();

    // wide quarters to long rows, add a bonus, then total per quarter
    let prog = TableProgram {
        inputs: vec!["sales".into()],
        stmts: vec![
            Expr::Gather {
                src: Source::Input(0),
                cols: vec!["q1".into(), "q2".into()],
                key: "quarter".into(),
                value: "units".into(),
            },
            Expr::Mutate {
                src: Source::Var(0),
                target: "with_bonus".into(),
                op: ArithOp::Add,
                lhs: "units".into(),
                rhs: Operand::Const(5.into()),
            },
            Expr::Summarize {
                src: Source::Var(1),
                keys: vec!["quarter".into()],
                agg: Agg::Sum,
                col: "with_bonus".into(),
                target: "total".into(),
            },
        ],
    };
    println!("{prog}\n");
    let steps = prog.eval_all(&[&sales]).unwrap();
    print_table("sales", &sales);
    for (i, t) in steps.iter().enumerate() {
        print_table(&format!("t{}", i + 1), t);
    }
}

fn print_table(name: &str, t: &Table) {
    println!("{name}: {}", t.columns().join(", "));
    for r in t.sorted_rows() {
        let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
        println!("    {}", cells.join(", "));
    }
}
