//! Condense the eight-block fixture and print its Graphviz rendering.
//!
//!     cargo run --example condense_dot | dot -Tsvg > blocks.svg

use coopstab::report::to_dot;
use coopstab::{analyze, load_matrix_market, AnalysisOptions};

fn main() -> coopstab::Result<()> {
    let text = include_str!("../data/fig1.mtx");
    let system = load_matrix_market(text)?;
    let a = analyze(&system, &AnalysisOptions::default())?;
    let c = &a.condensation;
    eprintln!("{} nodes in {} blocks, permutation {:?}", c.n(), c.h(), c.permutation());
    print!("{}", to_dot(c, Some(&a.spectra), Some(&a.report)));
    Ok(())
}
