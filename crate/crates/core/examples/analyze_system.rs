//! Classify a small system and print the verdict for each configuration
//! of two critical nodes.
//!
//!     cargo run --example analyze_system

use coopstab::{analyze, AnalysisOptions, CooperativeSystem};

fn main() -> coopstab::Result<()> {
    let cases: [(&str, &[&[f64]]); 4] = [
        ("two isolated traps", &[&[0.0, 0.0], &[0.0, 0.0]]),
        ("trap feeding a trap", &[&[0.0, 0.0], &[1.0, 0.0]]),
        ("leak into a trap", &[&[-1.0, 0.0], &[1.0, 0.0]]),
        ("self-exciting node", &[&[0.5, 0.0], &[1.0, -1.0]]),
    ];
    for (name, rows) in cases {
        let system = CooperativeSystem::from_rows(rows)?;
        let a = analyze(&system, &AnalysisOptions::default())?;
        println!(
            "{name:<22} {:<21} alg={} geo={}",
            a.report.verdict.as_str(),
            a.report.algebraic_multiplicity_zero,
            a.report.geometric_multiplicity_zero
        );
        for (k, s) in a.spectra.iter().enumerate() {
            println!("    B{k}: mu = {:+.3}  {}", s.mu, s.classification.as_str());
        }
        if let Some(reason) = &a.report.unstable_reason {
            println!("    reason: {}", coopstab::report::describe_reason(reason));
        }
    }
    Ok(())
}
