//! Projective inclusion between tables and the incomplete satisfiability
//! check the table search prunes with.
//!
//!     cargo run --example inclusion_check

use std::sync::Arc;

use sketchviz::constraint::{check_sat, Atom, Rel, SatCache, Term};
use sketchviz::io::read_csv_str;

fn main() {
    let data = read_csv_str("id,cond,a,gender\n1,1,3,M\n2,2,2,M\n3,1,1,F\n").unwrap();
    // made-up column names, as a sketch would produce
    let spec = read_csv_str("c1,c2\n1,M\n2,M\n").unwrap();

    for m in spec.proj_subset(&data) {
        println!("spec fits data via {m:?}");
    }
    let other = read_csv_str("c1,c2\n1,F\n2,F\n").unwrap();
    println!("second spec fits: {}\n", other.proj_subset_exists(&data));

    // the unknown intermediate table must contain `spec` and sit inside a
    // filter of `data`; the second system contradicts itself
    let (spec, data, other) = (Arc::new(spec), Arc::new(data), Arc::new(other));
    let fine = [Atom::lower(spec.clone(), Rel::Proj, 0), Atom::upper(0, Rel::Sub, data.clone())];
    let broken = [
        Atom::lower(spec, Rel::Proj, 0),
        Atom::lower(other, Rel::Proj, 0),
        Atom { lhs: Term::Var(0), rel: Rel::Sub, rhs: Term::Table(data.filter_rows(|r| r[3].as_text() == Some("M")).into()) },
    ];
    let mut cache = SatCache::default();
    println!("first system:  {:?}", check_sat(&fine, &mut cache));
    println!("second system: {:?}", check_sat(&broken, &mut cache));
}
