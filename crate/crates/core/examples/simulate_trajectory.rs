//! Integrate dm/dt = A m with the matrix exponential and watch a marginally
//! stable system settle on its steady state while a critical chain grows.
//!
//!     cargo run --example simulate_trajectory

use coopstab::oracle::{nullspace_projection, project, simulate};
use coopstab::{analyze, load_matrix_market, AnalysisOptions, StateVector};

fn main() -> coopstab::Result<()> {
    let times = [0.0, 1.0, 10.0, 100.0];

    let feeder = load_matrix_market(include_str!("../data/two_free.mtx"))?;
    let m0 = StateVector(vec![1.0, 1.0, 0.0]);
    let a = analyze(&feeder, &AnalysisOptions::default())?;
    let limit = project(&nullspace_projection(&feeder, &a.steady_state(&Default::default())?)?, &m0);
    println!("marginally stable, predicted limit {:?}", limit.0);
    for (t, m) in times.iter().zip(simulate(&feeder, &m0, &times)?) {
        println!("  t={t:<6} {:?}", m.0);
    }

    let chain = load_matrix_market(include_str!("../data/nilpotent.mtx"))?;
    println!("critical path, e^(At) = I + At");
    for (t, m) in times.iter().zip(simulate(&chain, &StateVector(vec![1.0, 0.0]), &times)?) {
        println!("  t={t:<6} {:?}", m.0);
    }
    Ok(())
}
