//! For a critical irreducible block B, e^(tB) converges and fixes the
//! positive left null vector. Checked here on the two critical blocks of
//! the eight-block fixture and a symmetric pair.
//!
//!     cargo run --example limit_check

use coopstab::oracle::expm_limit_check;
use coopstab::{analyze, load_matrix_market, AnalysisOptions, Criticality};
use nalgebra::DMatrix;

fn main() -> coopstab::Result<()> {
    let opts = Default::default();
    let pair = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    let check = expm_limit_check(&pair, &opts)?;
    println!("[[-1,1],[1,-1]]: t={} residual {:.1e}", check.t_big, check.residual);

    let system = load_matrix_market(include_str!("../data/fig1.mtx"))?;
    let a = analyze(&system, &AnalysisOptions::default())?;
    for (k, s) in a.spectra.iter().enumerate() {
        if s.classification != Criticality::Critical {
            continue;
        }
        let check = expm_limit_check(&a.condensation.block(k).matrix, &opts)?;
        println!(
            "B{k}: gap {:.3}, t={:.1}, u={:?}, residual {:.1e}",
            check.gap, check.t_big, check.left_vector, check.residual
        );
    }
    Ok(())
}
