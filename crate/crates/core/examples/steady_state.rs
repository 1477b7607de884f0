//! Build the non-negative steady-state basis and check each vector against
//! the path-sum formula.
//!
//!     cargo run --example steady_state

use coopstab::stability::{steady_state_via_paths, PATH_ORACLE_MAX_BLOCKS};
use coopstab::{analyze, load_matrix_market, AnalysisOptions};

fn main() -> coopstab::Result<()> {
    let system = load_matrix_market(include_str!("../data/fig1.mtx"))?;
    let a = analyze(&system, &AnalysisOptions::default())?;
    let basis = a.steady_state(&Default::default())?;
    let terms: Vec<String> = basis.basis.iter().map(|v| format!("{} m(B{})", v.alpha, v.block)).collect();
    println!("steady states: m* = {}", terms.join(" + "));
    for v in &basis.basis {
        let via_paths = steady_state_via_paths(&a.condensation, &a.spectra, v.block, PATH_ORACLE_MAX_BLOCKS)?;
        let gap = v
            .values
            .0
            .iter()
            .zip(&via_paths.0)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let shown: Vec<String> = v.values.0.iter().map(|x| format!("{x:.4}")).collect();
        println!("{} (free block B{}): [{}]", v.alpha, v.block, shown.join(" "));
        println!("    ||A m|| = {:.1e}, path-sum difference {gap:.1e}", v.residual);
    }
    Ok(())
}
