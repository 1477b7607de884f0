//! Compartmental systems: cooperative systems whose column sums are
//! non-positive, so total mass can only leave the system.

use crate::condensation::Condensation;
use crate::spectral::{BlockSpectrum, Criticality};
use crate::system::CooperativeSystem;

/// True when every column sum of `A` is at most `tol`.
pub fn is_compartmental(system: &CooperativeSystem, tol: f64) -> bool {
    let mut cols = vec![0.0; system.n()];
    for (_, j, v) in system.entries() {
        cols[j] += v;
    }
    cols.into_iter().all(|c| c <= tol)
}

/// Critical blocks with no outgoing edges.
pub fn trap_blocks(c: &Condensation, spectra: &[BlockSpectrum]) -> Vec<usize> {
    (0..c.h())
        .filter(|&k| spectra[k].classification == Criticality::Critical && c.successors(k).is_empty())
        .collect()
}
