//! Dominant (Perron-Frobenius) eigenpairs of irreducible Metzler blocks and
//! the critical / sub-critical / super-critical classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::condensation::{norm_inf, Condensation};
use crate::error::{Error, Result};

/// Tuning knobs for the per-block eigen-analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Relative criticality tolerance: `|mu| <= crit_tol_rel * max(1, ||B||inf)`.
    pub crit_tol_rel: f64,
    /// Relative residual target for power iteration.
    pub eig_tol: f64,
    pub max_iter: usize,
    /// Blocks of at most this dimension go straight to the dense solver.
    pub dense_cutoff: usize,
    /// Largest block the dense solver takes over when power iteration stalls.
    pub dense_fallback_max: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            crit_tol_rel: 1e-9,
            eig_tol: 1e-12,
            max_iter: 100_000,
            dense_cutoff: 64,
            dense_fallback_max: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criticality {
    SubCritical,
    Critical,
    SuperCritical,
}

impl Criticality {
    pub fn as_str(self) -> &'static str {
        match self {
            Criticality::SubCritical => "SubCritical",
            Criticality::Critical => "Critical",
            Criticality::SuperCritical => "SuperCritical",
        }
    }
}

/// Spectral summary of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    /// Dominant eigenvalue.
    pub mu: f64,
    /// Positive dominant right eigenvector, entries summing to one.
    pub phi: Vec<f64>,
    pub classification: Criticality,
    /// Tolerance `mu` was compared against.
    pub tolerance_used: f64,
    /// `||B phi - mu phi||inf`.
    pub residual: f64,
}

/// Dominant eigenvalue and normalized positive eigenvector of an irreducible
/// Metzler matrix.
///
/// Small blocks use a dense eigensolve. Larger ones run power iteration on
/// `B + sI` with `s = max|b_ii| + 1`, which is non-negative with a positive
/// diagonal, so the iteration cannot lock onto a period-2 oscillation.
pub fn dominant_eigenpair(matrix: &DMatrix<f64>, opts: &SpectralOptions) -> Result<(f64, DVector<f64>)> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "block matrix must be square");
    if n == 1 {
        return Ok((matrix[(0, 0)], DVector::from_element(1, 1.0)));
    }
    if n <= opts.dense_cutoff {
        return Ok(dense_eigenpair(matrix));
    }
    match power_iteration(matrix, opts) {
        Ok(pair) => Ok(pair),
        Err(_) if n <= opts.dense_fallback_max => Ok(dense_eigenpair(matrix)),
        Err(e) => Err(e),
    }
}

fn dense_eigenpair(matrix: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let n = matrix.nrows();
    let mu = matrix
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = matrix - DMatrix::identity(n, n) * mu;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    let phi = DVector::from_iterator(n, v_t.row(idx).iter().copied());
    (mu, normalize_positive(phi))
}

fn power_iteration(matrix: &DMatrix<f64>, opts: &SpectralOptions) -> Result<(f64, DVector<f64>)> {
    const CHECK_EVERY: usize = 16;
    let n = matrix.nrows();
    let shift = matrix.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())) + 1.0;
    let target = opts.eig_tol * norm_inf(matrix).max(1.0);
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut last_residual = f64::INFINITY;

    for it in 1..=opts.max_iter {
        let y = matrix * &x + &x * shift;
        let total = y.sum();
        x = y / total;
        if it % CHECK_EVERY == 0 || it == opts.max_iter {
            let bx = matrix * &x;
            let rayleigh = x.dot(&bx) / x.dot(&x);
            last_residual = (&bx - &x * rayleigh).amax() / x.amax();
            if last_residual <= target {
                return Ok((rayleigh, normalize_positive(x)));
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last_residual,
    })
}

/// Flips the sign so the vector is non-negative and rescales it to sum 1.
/// Entries that come out negative are rounding noise around zero.
fn normalize_positive(mut v: DVector<f64>) -> DVector<f64> {
    if v.sum() < 0.0 {
        v.neg_mut();
    }
    v.apply(|x| *x = x.abs());
    let total = v.sum();
    v / total
}

/// Critical iff `|mu| <= crit_tol_rel * max(1, scale)`, otherwise by sign.
/// Returns the classification and the tolerance used.
pub fn classify(mu: f64, scale: f64, opts: &SpectralOptions) -> (Criticality, f64) {
    let tau = opts.crit_tol_rel * scale.max(1.0);
    let class = if mu.abs() <= tau {
        Criticality::Critical
    } else if mu < 0.0 {
        Criticality::SubCritical
    } else {
        Criticality::SuperCritical
    };
    (class, tau)
}

/// Eigen-analysis of a single block matrix.
pub fn analyze_block(matrix: &DMatrix<f64>, opts: &SpectralOptions) -> Result<BlockSpectrum> {
    let (mu, phi) = dominant_eigenpair(matrix, opts)?;
    let residual = (matrix * &phi - &phi * mu).amax();
    let (classification, tolerance_used) = classify(mu, norm_inf(matrix), opts);
    Ok(BlockSpectrum {
        mu,
        phi: phi.iter().copied().collect(),
        classification,
        tolerance_used,
        residual,
    })
}

/// One [`BlockSpectrum`] per block, in block order.
pub fn analyze_all_blocks(c: &Condensation, opts: &SpectralOptions) -> Result<Vec<BlockSpectrum>> {
    c.blocks()
        .iter()
        .enumerate()
        .map(|(k, b)| {
            analyze_block(&b.matrix, opts).map_err(|e| Error::BlockSpectrum {
                block: k,
                source: Box::new(e),
            })
        })
        .collect()
}

/// The index sets of critical, sub-critical and super-critical blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassIndex {
    pub critical: Vec<usize>,
    pub sub_critical: Vec<usize>,
    pub super_critical: Vec<usize>,
}

impl ClassIndex {
    pub fn from_spectra(spectra: &[BlockSpectrum]) -> Self {
        let mut out = Self::default();
        for (k, s) in spectra.iter().enumerate() {
            match s.classification {
                Criticality::Critical => out.critical.push(k),
                Criticality::SubCritical => out.sub_critical.push(k),
                Criticality::SuperCritical => out.super_critical.push(k),
            }
        }
        out
    }
}
