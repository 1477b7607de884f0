use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stability::Verdict;
use crate::system::CooperativeSystem;

/// Largest system the dense routines accept.
pub const DENSE_MAX_N: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseOptions {
    /// Eigenvalues with `|lambda| <= zero_tol_rel * max(1, ||A||inf)` count as zero.
    ///
    /// Defective zero eigenvalues split into a cluster of radius roughly
    /// `eps^(1/k)` for a Jordan block of size `k`, so this has to be much
    /// looser than machine precision.
    pub zero_tol_rel: f64,
    /// Singular values below `rank_tol_rel * sigma_max` count as zero.
    pub rank_tol_rel: f64,
}

impl Default for DenseOptions {
    fn default() -> Self {
        Self {
            zero_tol_rel: 1e-4,
            rank_tol_rel: 1e-10,
        }
    }
}

/// Textbook stability verdict from the full spectrum of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVerdict {
    pub dominant_real_part: f64,
    pub algebraic_multiplicity_zero: usize,
    pub geometric_multiplicity_zero: usize,
    pub verdict: Verdict,
    pub zero_tolerance: f64,
}

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_MAX_N {
        Err(Error::TooLargeForDense { n, limit: DENSE_MAX_N })
    } else {
        Ok(())
    }
}

/// All eigenvalues of a dense matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Numerical nullity from the singular values.
pub fn nullity(m: &DMatrix<f64>, rank_tol_rel: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return m.ncols();
    }
    let rank = sv.iter().filter(|&&s| s > rank_tol_rel * top).count();
    m.ncols() - rank
}

/// Stability of `A` from a full eigendecomposition: stable when the
/// dominant eigenvalue is zero with equal algebraic and geometric
/// multiplicity.
pub fn dense_verdict(system: &CooperativeSystem, opts: &DenseOptions) -> Result<DenseVerdict> {
    check_dense(system.n())?;
    let a = system.to_dense();
    let eig = eigenvalues(&a);
    let tol = opts.zero_tol_rel * system.norm_inf().max(1.0);
    let dominant = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let algebraic = eig.iter().filter(|z| z.norm() <= tol).count();
    let geometric = nullity(&a, opts.rank_tol_rel);

    let verdict = if dominant > tol {
        Verdict::Unstable
    } else if algebraic == 0 {
        if dominant < -tol {
            Verdict::AsymptoticallyStable
        } else {
            Verdict::Unstable
        }
    } else if algebraic == geometric {
        Verdict::MarginallyStable
    } else {
        Verdict::Unstable
    };
    Ok(DenseVerdict {
        dominant_real_part: dominant,
        algebraic_multiplicity_zero: algebraic,
        geometric_multiplicity_zero: geometric,
        verdict,
        zero_tolerance: tol,
    })
}

/// Distance from zero of the rightmost nonzero eigenvalue, i.e. the decay
/// rate of every transient once the zero modes are split off.
pub fn spectral_gap(system: &CooperativeSystem, opts: &DenseOptions) -> Result<f64> {
    check_dense(system.n())?;
    let tol = opts.zero_tol_rel * system.norm_inf().max(1.0);
    let worst = eigenvalues(&system.to_dense())
        .into_iter()
        .filter(|z| z.norm() > tol)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(-worst)
}

/// Greedy matching of two eigenvalue multisets; returns the largest
/// pairwise distance, or `None` when the sizes differ.
pub fn match_spectra(a: &[Complex<f64>], b: &[Complex<f64>]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for za in a {
        let (idx, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, zb)| (i, (za - zb).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        used[idx] = true;
        worst = worst.max(dist);
    }
    Some(worst)
}
