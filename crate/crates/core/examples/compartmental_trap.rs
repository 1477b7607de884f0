//! A compartmental model: mass flows between compartments and leaks out,
//! except from one trap. All of it ends up distributed as the single
//! steady-state vector predicts.
//!
//!     cargo run --example compartmental_trap

use coopstab::compartmental::{is_compartmental, trap_blocks};
use coopstab::oracle::{generate_compartmental, simulate, CompartmentalSpec};
use coopstab::{analyze, AnalysisOptions, StateVector};

fn main() -> coopstab::Result<()> {
    let g = generate_compartmental(&CompartmentalSpec {
        seed: 11,
        ..Default::default()
    })?;
    let system = &g.system;
    assert!(is_compartmental(system, 1e-12));
    let a = analyze(system, &AnalysisOptions::default())?;
    println!("{} compartments, verdict {}", system.n(), a.report.verdict.as_str());
    println!("trap block(s): {:?} holding nodes {:?}", trap_blocks(&a.condensation, &a.spectra), g.trap);

    let basis = a.steady_state(&Default::default())?;
    let v = &basis.basis[0].values;
    println!("steady state direction: {:?}", v.0.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());

    let m = simulate(system, &StateVector::uniform(system.n(), 1.0), &[200.0])?;
    println!("state at t=200:        {:?}", m[0].0.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
    Ok(())
}
