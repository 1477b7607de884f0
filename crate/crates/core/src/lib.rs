//! Stability analysis of linear cooperative systems `dm/dt = A m`.
//!
//! `A` is a Metzler matrix: off-diagonal entries are non-negative. The
//! dependence graph is split into strongly connected components, each block
//! is classified by its dominant eigenvalue, and the verdict follows from
//! the block classes plus the paths between critical blocks. When the
//! system is marginally stable the non-negative steady states are built
//! explicitly, one basis vector per final critical block.
//!
//! ```
//! use coopstab::{analyze, AnalysisOptions, CooperativeSystem, Verdict};
//!
//! let a = CooperativeSystem::from_rows(&[&[0.0, 0.0], &[1.0, -2.0]]).unwrap();
//! let analysis = analyze(&a, &AnalysisOptions::default()).unwrap();
//! assert_eq!(analysis.report.verdict, Verdict::MarginallyStable);
//! let basis = analysis.steady_state(&Default::default()).unwrap();
//! assert_eq!(basis.basis[0].values.0, vec![1.0, 0.5]);
//! ```
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod compartmental;
pub mod condensation;
pub mod error;
pub mod oracle;
pub mod report;
pub mod spectral;
pub mod stability;
pub mod system;

pub use condensation::{condense, Block, Condensation, Coupling, Reachability};
pub use error::{Error, Result};
pub use spectral::{analyze_all_blocks, classify, dominant_eigenpair, BlockSpectrum, Criticality, SpectralOptions};
pub use stability::{
    path_sum_oracle, steady_state_basis, trivial_blocks, verdict, BlockRole, StabilityReport, SteadyStateBasis,
    SteadyStateOptions, UnstableReason, Verdict,
};
pub use system::{load_edge_list_json, load_matrix_market, CooperativeSystem, StateVector};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalysisOptions {
    pub spectral: SpectralOptions,
}

/// Everything the diakoptic pipeline derives from a system.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub condensation: Condensation,
    pub spectra: Vec<BlockSpectrum>,
    pub report: StabilityReport,
}

/// Condense, classify every block, and render the verdict.
pub fn analyze(system: &CooperativeSystem, opts: &AnalysisOptions) -> Result<Analysis> {
    let condensation = condense(system);
    let spectra = analyze_all_blocks(&condensation, &opts.spectral)?;
    let report = verdict(&condensation, &spectra);
    Ok(Analysis {
        condensation,
        spectra,
        report,
    })
}

impl Analysis {
    pub fn steady_state(&self, opts: &SteadyStateOptions) -> Result<SteadyStateBasis> {
        steady_state_basis(&self.condensation, &self.spectra, &self.report, opts)
    }
}
