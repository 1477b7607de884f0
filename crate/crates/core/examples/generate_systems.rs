//! Plant block classes with the generator and confirm the analysis finds
//! them again. Prints one generated system as edge-list JSON.
//!
//!     cargo run --example generate_systems

use coopstab::oracle::{generate, ClassPlan, GeneratorSpec, Topology};
use coopstab::{analyze, AnalysisOptions, Criticality};

fn main() -> coopstab::Result<()> {
    let spec = GeneratorSpec {
        topology: Topology::Diamond,
        classes: ClassPlan::Explicit(vec![
            Criticality::Critical,
            Criticality::SubCritical,
            Criticality::SubCritical,
            Criticality::SubCritical,
        ]),
        seed: 5,
        ..Default::default()
    };
    let g = generate(&spec)?;
    let a = analyze(&g.system, &AnalysisOptions::default())?;
    for p in &g.planted {
        let k = a.condensation.node_to_block()[p.nodes[0]];
        println!(
            "planted {:<12} mu={:+.3} nodes {:?} -> found B{k} {:<12} mu={:+.3}",
            p.class.as_str(),
            p.mu,
            p.nodes,
            a.spectra[k].classification.as_str(),
            a.spectra[k].mu
        );
    }
    println!("verdict {}", a.report.verdict.as_str());
    println!("{}", g.system.to_edge_list_json());
    Ok(())
}
