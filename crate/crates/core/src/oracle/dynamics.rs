use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dense::{check_dense, eigenvalues};
use crate::error::{Error, Result};
use crate::spectral::{classify, dominant_eigenpair, SpectralOptions};
use crate::stability::SteadyStateBasis;
use crate::system::{CooperativeSystem, StateVector};

/// `e^(A t) m0` at each requested time.
///
/// The exponential is evaluated by scaling and squaring with Padé
/// approximants, so every sample is computed independently of the others.
pub fn simulate(system: &CooperativeSystem, m0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    check_dense(system.n())?;
    m0.check_dim(system.n())?;
    if !m0.is_nonnegative() {
        return Err(Error::InvalidArgument("initial state must be non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite".into()));
    }
    let a = system.to_dense();
    let x0 = m0.to_dvector();
    Ok(times
        .iter()
        .map(|&t| StateVector::from(expm(&(&a * t)) * &x0))
        .collect())
}

/// Matrix exponential of a square matrix.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.exp()
}

/// Result of checking that `lim e^(tB)` fixes the left Perron vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    /// `||u L - u||inf / ||u||inf`.
    pub residual: f64,
    /// Time at which the limit was sampled ("certified to t = t_big").
    pub t_big: f64,
    /// Gap between the zero eigenvalue and the next real part.
    pub gap: f64,
    /// Left Perron vector, entries summing to one.
    pub left_vector: Vec<f64>,
}

pub const LIMIT_T_MAX: f64 = 1e4;

/// For a critical irreducible block `B`, samples `L = e^(t_big B)` and
/// measures how well it fixes the positive left 0-eigenvector `u`.
pub fn expm_limit_check(block: &DMatrix<f64>, opts: &SpectralOptions) -> Result<LimitCheck> {
    check_dense(block.nrows())?;
    let n = block.nrows();
    let (mu, _) = dominant_eigenpair(block, opts)?;
    let (class, _) = classify(mu, crate::condensation::norm_inf(block), opts);
    if class != crate::spectral::Criticality::Critical {
        return Err(Error::NotCritical(mu));
    }

    let gap = if n == 1 {
        f64::INFINITY
    } else {
        let mut re: Vec<f64> = eigenvalues(block).iter().map(|z| z.re).collect();
        re.sort_by(|a, b| b.total_cmp(a));
        re[0] - re[1]
    };
    if gap < 1e-8 {
        return Err(Error::GapTooSmall(gap));
    }
    let t_big = (50.0 / gap).clamp(1.0, LIMIT_T_MAX);

    // Left vector by power iteration on the shifted transpose.
    let power = SpectralOptions {
        dense_cutoff: 0,
        ..*opts
    };
    let (_, u) = dominant_eigenpair(&block.transpose(), &power)?;
    let limit = expm(&(block * t_big));
    let ul = limit.tr_mul(&u);
    let residual = (&ul - &u).amax() / u.amax();
    Ok(LimitCheck {
        residual,
        t_big,
        gap,
        left_vector: u.iter().copied().collect(),
    })
}

/// Oblique projection onto the null space of `A` along its range,
/// `R (L^T R)^-1 L^T`, with `R` the steady-state basis and `L` the left
/// null vectors of `A` from an SVD. For a marginally stable system this is
/// `lim e^(A t)`.
pub fn nullspace_projection(system: &CooperativeSystem, basis: &SteadyStateBasis) -> Result<DMatrix<f64>> {
    check_dense(system.n())?;
    let n = system.n();
    let f = basis.basis.len();
    if f == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let right = DMatrix::from_fn(n, f, |i, j| basis.basis[j].values.0[i]);
    let svd = system.to_dense().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let left = DMatrix::from_fn(n, f, |i, j| u[(i, order[j])]);
    let gram = left.tr_mul(&right);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("left and right null spaces are not dual".into()))?;
    Ok(&right * inv * left.transpose())
}

/// Convenience: projection applied to a state.
pub fn project(p: &DMatrix<f64>, m0: &StateVector) -> StateVector {
    StateVector::from(p * DVector::from_column_slice(&m0.0))
}
