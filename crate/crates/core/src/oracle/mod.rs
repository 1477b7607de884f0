//! Independent brute-force checks: dense spectra of the whole matrix,
//! matrix-exponential trajectories, and seeded random systems.

mod dense;
mod dynamics;
mod generate;

pub use dense::{
    dense_verdict, eigenvalues, match_spectra, nullity, spectral_gap, DenseOptions, DenseVerdict, DENSE_MAX_N,
};
pub use dynamics::{expm, expm_limit_check, nullspace_projection, project, simulate, LimitCheck, LIMIT_T_MAX};
pub use generate::{
    generate, generate_compartmental, ClassPlan, CompartmentalSpec, GeneratedCompartmental, GeneratedSystem,
    GeneratorSpec, PlantedBlock, Topology,
};
