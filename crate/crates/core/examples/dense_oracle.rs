//! Cross-check the block-wise verdict against a full eigen-decomposition on
//! a batch of generated systems.
//!
//!     cargo run --release --example dense_oracle

use coopstab::oracle::{dense_verdict, generate, ClassPlan, DenseOptions, GeneratorSpec, Topology};
use coopstab::{analyze, AnalysisOptions};

fn main() -> coopstab::Result<()> {
    let mut agree = 0;
    let mut total = 0;
    for topo in Topology::ALL_CONNECTED {
        for seed in 0..50 {
            let g = generate(&GeneratorSpec::family(topo, ClassPlan::mixed(), seed))?;
            let fast = analyze(&g.system, &AnalysisOptions::default())?.report.verdict;
            let slow = dense_verdict(&g.system, &DenseOptions::default())?;
            total += 1;
            if fast == slow.verdict {
                agree += 1;
            } else {
                println!("{topo:?} seed {seed}: {fast:?} vs dense {:?}", slow.verdict);
            }
        }
    }
    println!("{agree}/{total} verdicts agree");
    Ok(())
}
