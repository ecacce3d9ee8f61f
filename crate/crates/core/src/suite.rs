//! The bundled mini-suite. Every case is written as a table program plus a
//! visual program; the target trace is whatever that pair renders.

use serde_json::json;

use crate::bench::{BenchmarkCase, CaseFile};
use crate::dsl::{Agg, ArithOp, CmpOp, Expr, Operand, Pred, Source, TableProgram};
use crate::io::read_csv_str;
use crate::table::Table;
use crate::viz::{Channel, Layer, LayerKind, Mark, Orient, Plot, VizProgram};

pub struct SuiteCase {
    pub name: &'static str,
    pub description: &'static str,
    pub inputs: Vec<(String, Table)>,
    /// One per layer, or one shared by all layers.
    pub programs: Vec<TableProgram>,
    pub viz: VizProgram,
}

impl SuiteCase {
    pub fn render(&self) -> Result<crate::trace::VisualTrace, String> {
        let tables: Vec<&Table> = self.inputs.iter().map(|(_, t)| t).collect();
        let outs = self
            .programs
            .iter()
            .map(|p| p.eval(&tables).map_err(|e| format!("{}: {e}", self.name)))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&Table> = outs.iter().collect();
        let trace = self.viz.render(&refs).map_err(|e| format!("{}: {e}", self.name))?;
        if trace.is_empty() {
            return Err(format!("{}: renders nothing", self.name));
        }
        Ok(trace)
    }

    pub fn to_case(&self) -> Result<BenchmarkCase, String> {
        Ok(BenchmarkCase {
            name: self.name.to_string(),
            inputs: self.inputs.clone(),
            target: self.render()?,
        })
    }

    pub fn to_file(&self) -> Result<CaseFile, String> {
        let script = json!({
            "table": self.programs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "visual": self.viz.to_string(),
        });
        Ok(self.to_case()?.to_file(self.description, Some(script)))
    }
}

fn csv(name: &str, text: &str) -> (String, Table) {
    (name.to_string(), read_csv_str(text).expect("suite table"))
}

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn prog(inputs: &[&str], stmts: Vec<Expr>) -> TableProgram {
    TableProgram {
        inputs: s(inputs),
        stmts,
    }
}

fn select(src: Source, cols: &[&str]) -> Expr {
    Expr::Select { src, cols: s(cols) }
}

fn layer(kind: LayerKind, chans: &[(&str, &str)]) -> Layer {
    chans.iter().fold(Layer::new(kind), |l, (k, c)| l.with(k, Channel::col(*c)))
}

use Source::{Input as In, Var};

fn mutate(src: Source, target: &str, op: ArithOp, lhs: &str, rhs: &str) -> Expr {
    Expr::Mutate {
        src,
        target: target.into(),
        op,
        lhs: lhs.into(),
        rhs: Operand::Col(rhs.into()),
    }
}

fn summarize(src: Source, keys: &[&str], agg: Agg, col: &str, target: &str) -> Expr {
    Expr::Summarize {
        src,
        keys: s(keys),
        agg,
        col: col.into(),
        target: target.into(),
    }
}

fn filter(src: Source, col: &str, op: CmpOp, v: impl Into<crate::value::Value>) -> Expr {
    Expr::Filter {
        src,
        pred: Pred::Cmp(Operand::Col(col.into()), op, Operand::Const(v.into())),
    }
}

fn gather(src: Source, cols: &[&str], key: &str, value: &str) -> Expr {
    Expr::Gather {
        src,
        cols: s(cols),
        key: key.into(),
        value: value.into(),
    }
}

fn join_eq(left: Source, right: Source, a: &str, b: &str) -> Expr {
    Expr::Join {
        left,
        right,
        pred: Pred::Cmp(Operand::Col(a.into()), CmpOp::Eq, Operand::Col(b.into())),
    }
}

pub fn mini_suite() -> Vec<SuiteCase> {
    let scatter = LayerKind::Scatter(Mark::Point);
    let stacked = LayerKind::StackedBar(Orient::Vertical);
    vec![
        SuiteCase {
            name: "01_bar_count",
            description: "bar of head counts per department",
            inputs: vec![csv(
                "T",
                "dept,name,salary,level\nops,ann,52,1\nops,bob,61,2\nops,cid,58,2\nlab,dee,70,3\nlab,eve,66,2\nhr,fay,49,1\nhr,gus,51,1\nhr,hal,57,2\nhr,ivy,60,3\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![summarize(In(0), &["dept"], Agg::Count, "name", "n"), select(Var(0), &["dept", "n"])],
            )],
            viz: VizProgram::layer(layer(LayerKind::Bar, &[("x", "dept"), ("y", "n")])),
        },
        SuiteCase {
            name: "02_scatter_margin",
            description: "margin per head against staff for one region",
            inputs: vec![csv(
                "T",
                "id,region,sales,cost,staff\n1,north,40,31,3\n2,south,52,40,4\n3,north,61,45,5\n4,north,38,30,2\n5,south,70,51,6\n6,north,55,39,4\n7,south,47,42,3\n8,north,66,50,6\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    filter(In(0), "region", CmpOp::Eq, "north"),
                    mutate(Var(0), "margin", ArithOp::Sub, "sales", "cost"),
                    mutate(Var(1), "per_head", ArithOp::Div, "margin", "staff"),
                    select(Var(2), &["staff", "per_head"]),
                ],
            )],
            viz: VizProgram::layer(layer(scatter, &[("x", "staff"), ("y", "per_head")])),
        },
        SuiteCase {
            name: "03_bar_profit",
            description: "bar of summed profit for the regions above a threshold",
            inputs: vec![csv(
                "T",
                "region,month,sales,cost\neast,1,10,6\neast,2,12,7\nwest,1,7,5\nwest,2,9,4\nnorth,1,4,3\nnorth,2,8,2\nsouth,1,11,9\nsouth,2,3,1\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    mutate(In(0), "profit", ArithOp::Sub, "sales", "cost"),
                    summarize(Var(0), &["region"], Agg::Sum, "profit", "total"),
                    filter(Var(1), "total", CmpOp::Gt, 4),
                    select(Var(2), &["region", "total"]),
                ],
            )],
            viz: VizProgram::layer(layer(LayerKind::Bar, &[("x", "region"), ("y", "total")])),
        },
        SuiteCase {
            name: "04_line_running",
            description: "running totals of wide columns, one line each",
            inputs: vec![csv("T", "year,north,south,east\n2015,3,8,1\n2016,5,7,2\n2017,4,9,2\n2018,6,6,3\n")],
            programs: vec![prog(
                &["T"],
                vec![
                    gather(In(0), &["north", "south", "east"], "key", "value"),
                    Expr::Cumsum {
                        src: Var(0),
                        col: "value".into(),
                        keys: s(&["key"]),
                        target: "running".into(),
                    },
                    select(Var(1), &["year", "running", "key"]),
                ],
            )],
            viz: VizProgram::layer(layer(LayerKind::Line, &[("x", "year"), ("y", "running"), ("color", "key")])),
        },
        SuiteCase {
            name: "05_stacked_join",
            description: "units of the larger orders per quarter, stacked by a category from a lookup table",
            inputs: vec![
                csv("P", "product,category\npen,office\nink,office\ntea,food\njam,food\n"),
                csv(
                    "S",
                    "product,quarter,units\npen,Q1,4\nink,Q1,2\ntea,Q1,5\njam,Q1,1\npen,Q2,3\nink,Q2,6\ntea,Q2,2\njam,Q2,2\n",
                ),
            ],
            programs: vec![prog(
                &["P", "S"],
                vec![
                    join_eq(In(0), In(1), "product.1", "product.2"),
                    filter(Var(0), "units", CmpOp::Gt, 1),
                    summarize(Var(1), &["quarter", "category"], Agg::Sum, "units", "total"),
                    select(Var(2), &["quarter", "total", "category"]),
                ],
            )],
            viz: VizProgram::layer(layer(stacked, &[("x", "quarter"), ("h", "total"), ("color", "category")])),
        },
        SuiteCase {
            name: "06_scatter_filtered_sum",
            description: "totals of two scores for the older participants",
            inputs: vec![csv(
                "T",
                "id,score,bonus,age,group\n1,40,3,21,a\n2,72,5,25,b\n3,55,2,30,a\n4,91,1,22,b\n5,38,4,28,a\n6,64,6,35,b\n7,47,2,26,b\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    filter(In(0), "age", CmpOp::Gt, 24),
                    mutate(Var(0), "total", ArithOp::Add, "score", "bonus"),
                    select(Var(1), &["age", "total", "group"]),
                ],
            )],
            viz: VizProgram::layer(layer(scatter, &[("x", "age"), ("y", "total"), ("color", "group")])),
        },
        SuiteCase {
            name: "07_join_mutate",
            description: "sum of two results per condition, colored by a joined attribute, one condition left out",
            inputs: vec![
                csv("T1", "id,cond,a,aneg\n1,1,3,4\n2,2,2,4\n3,1,1,1\n4,2,5,2\n5,3,2,6\n6,3,4,1\n"),
                csv("T2", "id,gender\n1,M\n2,M\n3,F\n4,F\n5,M\n6,F\n"),
            ],
            programs: vec![prog(
                &["T1", "T2"],
                vec![
                    join_eq(In(0), In(1), "id.1", "id.2"),
                    mutate(Var(0), "sum", ArithOp::Add, "a", "aneg"),
                    filter(Var(1), "cond", CmpOp::Ne, 3),
                    select(Var(2), &["cond", "sum", "gender"]),
                ],
            )],
            viz: VizProgram::layer(layer(scatter, &[("x", "cond"), ("y", "sum"), ("color", "gender")])),
        },
        SuiteCase {
            name: "08_spread_gain",
            description: "gain against baseline from long-form measurements",
            inputs: vec![csv(
                "T",
                "subject,phase,val\ns1,pre,3\ns1,post,5\ns2,pre,4\ns2,post,4\ns3,pre,2\ns3,post,6\ns4,pre,5\ns4,post,8\ns5,pre,6\ns5,post,7\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    Expr::Spread {
                        src: In(0),
                        key: "phase".into(),
                        value: "val".into(),
                    },
                    mutate(Var(0), "gain", ArithOp::Sub, "post", "pre"),
                    select(Var(1), &["pre", "gain"]),
                ],
            )],
            viz: VizProgram::layer(layer(scatter, &[("x", "pre"), ("y", "gain")])),
        },
        SuiteCase {
            name: "09_cumsum_store",
            description: "running visits for one store",
            inputs: vec![csv(
                "T",
                "day,store,visits\n1,A,4\n1,B,3\n2,A,2\n2,B,6\n3,A,5\n3,B,1\n4,A,1\n4,B,2\n5,A,3\n5,B,4\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    filter(In(0), "store", CmpOp::Eq, "A"),
                    Expr::Cumsum {
                        src: Var(0),
                        col: "visits".into(),
                        keys: Vec::new(),
                        target: "running".into(),
                    },
                    select(Var(1), &["day", "running"]),
                ],
            )],
            viz: VizProgram::layer(layer(LayerKind::Line, &[("x", "day"), ("y", "running")])),
        },
        SuiteCase {
            name: "10_separate_avg",
            description: "yearly average for one region, keyed by a combined period field",
            inputs: vec![csv(
                "T",
                "period,amount,region\n2019-Q1,5,n\n2019-Q2,7,s\n2019-Q3,3,n\n2020-Q1,6,s\n2020-Q2,9,n\n2021-Q1,4,s\n2021-Q2,8,n\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    Expr::Separate {
                        src: In(0),
                        col: "period".into(),
                        delim: "-".into(),
                    },
                    filter(Var(0), "region", CmpOp::Eq, "n"),
                    summarize(Var(1), &["period_1"], Agg::Avg, "amount", "avg"),
                    select(Var(2), &["period_1", "avg"]),
                ],
            )],
            viz: VizProgram::layer(layer(LayerKind::Bar, &[("x", "period_1"), ("y", "avg")])),
        },
        SuiteCase {
            name: "11_mean_line_and_points",
            description: "a line through per-step means over the raw points",
            inputs: vec![csv("T", "t,rep,v\n1,1,2\n1,2,4\n2,1,5\n2,2,7\n3,1,3\n3,2,1\n4,1,6\n4,2,8\n")],
            programs: vec![
                prog(
                    &["T"],
                    vec![summarize(In(0), &["t"], Agg::Avg, "v", "mean"), select(Var(0), &["t", "mean"])],
                ),
                prog(&["T"], vec![select(In(0), &["t", "v"])]),
            ],
            viz: VizProgram::multi_layer(vec![
                layer(LayerKind::Line, &[("x", "t"), ("y", "mean")]),
                layer(scatter, &[("x", "t"), ("y", "v")]),
            ]),
        },
        SuiteCase {
            name: "12_faceted_spread",
            description: "one scatter panel per site from long-form readings",
            inputs: vec![csv(
                "T",
                "site,day,kind,reading\nA,1,temp,20\nA,1,rain,3\nA,2,temp,22\nA,2,rain,1\nA,3,temp,19\nA,3,rain,4\nB,1,temp,25\nB,1,rain,0\nB,2,temp,23\nB,2,rain,2\n",
            )],
            programs: vec![prog(
                &["T"],
                vec![
                    Expr::Spread {
                        src: In(0),
                        key: "kind".into(),
                        value: "reading".into(),
                    },
                    select(Var(0), &["temp", "rain", "site"]),
                ],
            )],
            viz: VizProgram::multi_plot(
                Plot::Single(layer(scatter, &[("x", "temp"), ("y", "rain")])),
                Channel::col("site"),
                Channel::Empty,
            ),
        },
    ]
}
