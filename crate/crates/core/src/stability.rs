//! Stability verdict from block classes and block-DAG topology, and explicit
//! construction of the non-negative steady-state basis.
//!
//! A block is *trivial* when it carries no mass in any non-negative
//! marginally stable fixed point. Those are exactly the blocks upstream of a
//! critical block, plus sub-critical blocks with no critical block upstream.
//! Critical blocks with no critical block downstream are *final* (or free):
//! each contributes one free parameter to the steady-state family.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::condensation::{norm_inf, Condensation};
use crate::error::{Error, Result};
use crate::spectral::{BlockSpectrum, ClassIndex, Criticality};
use crate::system::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AsymptoticallyStable,
    MarginallyStable,
    Unstable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AsymptoticallyStable => "AsymptoticallyStable",
            Verdict::MarginallyStable => "MarginallyStable",
            Verdict::Unstable => "Unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum UnstableReason {
    /// First super-critical block in topological order.
    SuperCriticalBlock { block: usize },
    /// Two critical blocks joined by a directed path; `path` is a shortest
    /// witness, endpoints included.
    CriticalPath {
        upstream: usize,
        downstream: usize,
        path: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRole {
    pub block: usize,
    /// `None` when a super-critical block is present.
    pub is_trivial: Option<bool>,
    pub is_final_critical: bool,
}

impl BlockRole {
    /// Free blocks are the non-trivial critical ones, i.e. the final critical ones.
    pub fn is_free(&self) -> bool {
        self.is_final_critical
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub unstable_reason: Option<UnstableReason>,
    /// Number of critical blocks.
    pub algebraic_multiplicity_zero: usize,
    /// Number of final critical blocks.
    pub geometric_multiplicity_zero: usize,
    pub roles: Vec<BlockRole>,
}

impl StabilityReport {
    pub fn free_blocks(&self) -> Vec<usize> {
        self.roles
            .iter()
            .filter(|r| r.is_final_critical)
            .map(|r| r.block)
            .collect()
    }
}

fn critical_mask(spectra: &[BlockSpectrum]) -> Vec<bool> {
    spectra
        .iter()
        .map(|s| s.classification == Criticality::Critical)
        .collect()
}

/// Critical blocks with no other critical block downstream.
pub fn final_critical(c: &Condensation, spectra: &[BlockSpectrum]) -> Vec<bool> {
    let critical = critical_mask(spectra);
    let feeds_critical = c.upstream_of(&critical);
    critical
        .iter()
        .zip(&feeds_critical)
        .map(|(&crit, &up)| crit && !up)
        .collect()
}

/// Trivial blocks, computed by two reachability sweeps from the critical set.
pub fn trivial_blocks(c: &Condensation, spectra: &[BlockSpectrum]) -> Result<BTreeSet<usize>> {
    if let Some(k) = spectra
        .iter()
        .position(|s| s.classification == Criticality::SuperCritical)
    {
        return Err(Error::SuperCriticalPresent(k));
    }
    let critical = critical_mask(spectra);
    let upstream_of_critical = c.upstream_of(&critical);
    let downstream_of_critical = c.downstream_of(&critical);
    Ok((0..c.h())
        .filter(|&k| {
            upstream_of_critical[k]
                || (spectra[k].classification == Criticality::SubCritical && !downstream_of_critical[k])
        })
        .collect())
}

/// Stability verdict: all sub-critical means asymptotically stable; any
/// super-critical block, or a path between two critical blocks, means
/// unstable; otherwise marginally stable.
pub fn verdict(c: &Condensation, spectra: &[BlockSpectrum]) -> StabilityReport {
    let classes = ClassIndex::from_spectra(spectra);
    let finals = final_critical(c, spectra);
    let trivial = trivial_blocks(c, spectra).ok();
    let roles = (0..c.h())
        .map(|k| BlockRole {
            block: k,
            is_trivial: trivial.as_ref().map(|t| t.contains(&k)),
            is_final_critical: finals[k],
        })
        .collect();
    let algebraic = classes.critical.len();
    let geometric = finals.iter().filter(|&&f| f).count();

    let (verdict, unstable_reason) = if let Some(&block) = classes.super_critical.first() {
        (Verdict::Unstable, Some(UnstableReason::SuperCriticalBlock { block }))
    } else if classes.critical.is_empty() {
        (Verdict::AsymptoticallyStable, None)
    } else if let Some(path) = shortest_critical_path(c, spectra, &classes.critical) {
        let reason = UnstableReason::CriticalPath {
            upstream: path[0],
            downstream: *path.last().unwrap(),
            path,
        };
        (Verdict::Unstable, Some(reason))
    } else {
        (Verdict::MarginallyStable, None)
    };

    StabilityReport {
        verdict,
        unstable_reason,
        algebraic_multiplicity_zero: algebraic,
        geometric_multiplicity_zero: geometric,
        roles,
    }
}

/// Shortest block path joining two critical blocks. Ties go to the
/// smallest upstream block.
fn shortest_critical_path(c: &Condensation, spectra: &[BlockSpectrum], critical: &[usize]) -> Option<Vec<usize>> {
    let is_critical = |b: usize| spectra[b].classification == Criticality::Critical;
    critical
        .iter()
        .filter_map(|&k| c.shortest_path_to(k, is_critical))
        .min_by_key(|p| p.len())
}

// ---------------------------------------------------------------------------
// Steady states

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    /// Relative residual tolerance; also scales the negative-dust clamp.
    pub residual_tol: f64,
    /// Build 0-eigenvectors even when the system is not marginally stable.
    pub force: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisVector {
    /// Name of the free parameter multiplying this vector.
    pub alpha: String,
    /// The free block this vector is anchored on.
    pub block: usize,
    pub values: StateVector,
    /// `||A m||inf`.
    pub residual: f64,
}

/// Basis of the non-negative steady states, one vector per free block.
/// Every steady state is `sum_k alpha_k * basis[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateBasis {
    pub basis: Vec<BasisVector>,
}

impl SteadyStateBasis {
    pub fn free_parameters(&self) -> Vec<&str> {
        self.basis.iter().map(|b| b.alpha.as_str()).collect()
    }
}

/// Builds the steady-state basis by propagating each free block's dominant
/// eigenvector downstream in topological order, one linear solve per
/// downstream block.
pub fn steady_state_basis(
    c: &Condensation,
    spectra: &[BlockSpectrum],
    report: &StabilityReport,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateBasis> {
    if report.verdict != Verdict::MarginallyStable && !opts.force {
        return Err(Error::NotMarginallyStable(report.verdict.as_str().to_string()));
    }
    let offsets = c.offsets();
    let scale = normal_form_norm_inf(c).max(1.0);
    let lus = BlockSolver::new(c);
    let mut basis = Vec::new();
    for f in report.free_blocks() {
        let mut parts = propagate_from(c, spectra, f, &lus)?;
        let peak = parts.iter().flatten().fold(0.0f64, |m, v| m.max(v.amax()));
        let dust = 10.0 * opts.residual_tol * scale * peak;
        let mut values = vec![0.0; c.n()];
        for (k, part) in parts.iter_mut().enumerate() {
            let Some(part) = part else { continue };
            for (local, v) in part.iter_mut().enumerate() {
                let node = c.block(k).nodes[local];
                if *v < 0.0 && !opts.force {
                    if *v < -dust {
                        return Err(Error::NegativeSteadyState { node, value: *v });
                    }
                    *v = 0.0;
                }
                values[node] = *v;
            }
        }
        let permuted: Vec<f64> = c.permutation().iter().map(|&v| values[v]).collect();
        let residual = apply_normal_form(c, &offsets, &permuted).amax();
        basis.push(BasisVector {
            alpha: format!("alpha_{f}"),
            block: f,
            values: StateVector(values),
            residual,
        });
    }
    Ok(SteadyStateBasis { basis })
}

/// Per-block sub-vectors of the basis vector anchored on `free`;
/// `None` marks blocks not downstream of it (identically zero).
fn propagate_from(
    c: &Condensation,
    spectra: &[BlockSpectrum],
    free: usize,
    lus: &BlockSolver,
) -> Result<Vec<Option<DVector<f64>>>> {
    let h = c.h();
    let mut seed = vec![false; h];
    seed[free] = true;
    let downstream = c.downstream_of(&seed);
    let mut parts: Vec<Option<DVector<f64>>> = vec![None; h];
    parts[free] = Some(DVector::from_column_slice(&spectra[free].phi));
    for k in free + 1..h {
        if !downstream[k] {
            continue;
        }
        let mut rhs = DVector::zeros(c.block(k).size());
        for &l in c.predecessors(k) {
            if let Some(ml) = &parts[l] {
                for &(r, col, w) in c.coupling_entries(k, l) {
                    rhs[r] += w * ml[col];
                }
            }
        }
        rhs.neg_mut();
        parts[k] = Some(lus.solve(k, &rhs)?);
    }
    Ok(parts)
}

/// Lazily factorized LU of every block, with a small-pivot guard.
struct BlockSolver<'a> {
    c: &'a Condensation,
    cache: std::cell::RefCell<Vec<Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>>>,
}

impl<'a> BlockSolver<'a> {
    fn new(c: &'a Condensation) -> Self {
        Self {
            c,
            cache: std::cell::RefCell::new(vec![None; c.h()]),
        }
    }

    fn solve(&self, k: usize, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let mut cache = self.cache.borrow_mut();
        if cache[k].is_none() {
            let b = &self.c.block(k).matrix;
            let lu = b.clone().lu();
            let threshold = 1e-13 * norm_inf(b);
            let smallest = lu.u().diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
            if smallest <= threshold {
                return Err(Error::SingularSubCriticalSolve(k));
            }
            cache[k] = Some(lu);
        }
        cache[k]
            .as_ref()
            .unwrap()
            .solve(rhs)
            .ok_or(Error::SingularSubCriticalSolve(k))
    }
}

/// `A x` evaluated blockwise, `x` given in permuted order.
fn apply_normal_form(c: &Condensation, offsets: &[usize], x: &[f64]) -> DVector<f64> {
    let mut y = DVector::zeros(c.n());
    for k in 0..c.h() {
        let (start, end) = (offsets[k], offsets[k + 1]);
        let xk = DVector::from_column_slice(&x[start..end]);
        let yk = &c.block(k).matrix * xk;
        for (r, v) in yk.iter().enumerate() {
            y[start + r] += v;
        }
        for &l in c.predecessors(k) {
            for &(r, col, w) in c.coupling_entries(k, l) {
                y[start + r] += w * x[offsets[l] + col];
            }
        }
    }
    y
}

fn normal_form_norm_inf(c: &Condensation) -> f64 {
    let offsets = c.offsets();
    let mut rows = vec![0.0; c.n()];
    for k in 0..c.h() {
        for (r, row) in c.block(k).matrix.row_iter().enumerate() {
            rows[offsets[k] + r] += row.iter().map(|v| v.abs()).sum::<f64>();
        }
        for &l in c.predecessors(k) {
            for &(r, _, w) in c.coupling_entries(k, l) {
                rows[offsets[k] + r] += w.abs();
            }
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Path-sum cross-check

/// Default block limit for [`path_sum_oracle`].
pub const PATH_ORACLE_MAX_BLOCKS: usize = 12;

/// Alternating sum over every block path from free block `l` to
/// sub-critical block `k`:
/// `P_kl = sum (-1)^(e-1) C_{k p_m} B_{p_m}^-1 ... B_{p_1}^-1 C_{p_1 l}`
/// with `e` the number of edges on the path.
///
/// Exponential in the condensation size; meant as an independent check on
/// the recursive construction.
pub fn path_sum_oracle(
    c: &Condensation,
    spectra: &[BlockSpectrum],
    k: usize,
    l: usize,
    max_blocks: usize,
) -> Result<DMatrix<f64>> {
    if c.h() > max_blocks {
        return Err(Error::TooManyBlocks {
            blocks: c.h(),
            limit: max_blocks,
        });
    }
    for idx in [k, l] {
        if idx >= c.h() {
            return Err(Error::BlockOutOfRange { index: idx, count: c.h() });
        }
    }
    if !final_critical(c, spectra)[l] {
        return Err(Error::NotFinalCritical(l));
    }
    if spectra[k].classification != Criticality::SubCritical {
        return Err(Error::InvalidArgument(format!("block {k} is not sub-critical")));
    }
    let lus = BlockSolver::new(c);
    let mut total = DMatrix::zeros(c.block(k).size(), c.block(l).size());
    for path in c.all_paths(l, k) {
        // path = [l, p_1, ..., p_m, k]
        let mut term = c.extract_coupling(path[1], l)?.matrix;
        for w in path[1..].windows(2) {
            let (mid, next) = (w[0], w[1]);
            let mut solved = DMatrix::zeros(term.nrows(), term.ncols());
            for (j, col) in term.column_iter().enumerate() {
                solved.set_column(j, &lus.solve(mid, &col.into_owned())?);
            }
            term = c.extract_coupling(next, mid)?.matrix * solved;
        }
        let edges = path.len() - 1;
        if edges % 2 == 0 {
            total -= term;
        } else {
            total += term;
        }
    }
    Ok(total)
}

/// The basis vector anchored on free block `free`, with every downstream
/// sub-critical sub-vector computed as `-B_k^-1 P_k,free phi_free` instead of
/// by recursion.
pub fn steady_state_via_paths(
    c: &Condensation,
    spectra: &[BlockSpectrum],
    free: usize,
    max_blocks: usize,
) -> Result<StateVector> {
    let lus = BlockSolver::new(c);
    let phi = DVector::from_column_slice(&spectra[free].phi);
    let mut seed = vec![false; c.h()];
    seed[free] = true;
    let downstream = c.downstream_of(&seed);
    let mut values = vec![0.0; c.n()];
    for (local, &node) in c.block(free).nodes.iter().enumerate() {
        values[node] = phi[local];
    }
    for k in 0..c.h() {
        if !downstream[k] {
            continue;
        }
        let p = path_sum_oracle(c, spectra, k, free, max_blocks)?;
        let mk = -lus.solve(k, &(p * &phi))?;
        for (local, &node) in c.block(k).nodes.iter().enumerate() {
            values[node] = mk[local];
        }
    }
    Ok(StateVector(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condensation::condense;
    use crate::spectral::{analyze_all_blocks, SpectralOptions};
    use crate::system::CooperativeSystem;
    use approx::assert_abs_diff_eq;

    fn setup(rows: &[&[f64]]) -> (Condensation, Vec<BlockSpectrum>) {
        let s = CooperativeSystem::from_rows(rows).unwrap();
        let c = condense(&s);
        let spectra = analyze_all_blocks(&c, &SpectralOptions::default()).unwrap();
        (c, spectra)
    }

    #[test]
    fn trivial_blocks_examples() {
        let (c, s) = setup(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(trivial_blocks(&c, &s).unwrap(), BTreeSet::from([0]));

        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, -2.0]]);
        assert!(trivial_blocks(&c, &s).unwrap().is_empty());

        // Isolated sub-critical block next to an isolated critical one.
        let (c, s) = setup(&[&[-1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(trivial_blocks(&c, &s).unwrap(), BTreeSet::from([0]));

        let (c, s) = setup(&[&[1.0]]);
        assert_eq!(trivial_blocks(&c, &s), Err(Error::SuperCriticalPresent(0)));
    }

    #[test]
    fn verdict_examples() {
        let (c, s) = setup(&[&[-1.0, 0.0], &[1.0, -1.0]]);
        assert_eq!(verdict(&c, &s).verdict, Verdict::AsymptoticallyStable);

        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let r = verdict(&c, &s);
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(
            r.unstable_reason,
            Some(UnstableReason::CriticalPath {
                upstream: 0,
                downstream: 1,
                path: vec![0, 1]
            })
        );
        assert_eq!(r.algebraic_multiplicity_zero, 2);
        assert_eq!(r.geometric_multiplicity_zero, 1);

        let (c, s) = setup(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 2.0, -1.0]]);
        let r = verdict(&c, &s);
        assert_eq!(r.verdict, Verdict::MarginallyStable);
        assert_eq!(r.algebraic_multiplicity_zero, 2);
        assert_eq!(r.geometric_multiplicity_zero, 2);

        let (c, s) = setup(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, -1.0]]);
        let r = verdict(&c, &s);
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(r.unstable_reason, Some(UnstableReason::SuperCriticalBlock { block: 0 }));
        assert!(r.roles.iter().all(|role| role.is_trivial.is_none()));
    }

    #[test]
    fn witness_is_shortest() {
        // Critical 0 -> sub 1 -> sub 2 -> critical 3, plus critical 0 -> critical 4 directly.
        let s = CooperativeSystem::validate(
            [
                (1, 0, 1.0),
                (1, 1, -1.0),
                (2, 1, 1.0),
                (2, 2, -1.0),
                (3, 2, 1.0),
                (4, 0, 1.0),
            ],
            5,
        )
        .unwrap();
        let c = condense(&s);
        let spectra = analyze_all_blocks(&c, &SpectralOptions::default()).unwrap();
        let r = verdict(&c, &spectra);
        let Some(UnstableReason::CriticalPath { path, .. }) = r.unstable_reason else {
            panic!("expected critical path");
        };
        assert_eq!(path.len(), 2);
    }

    #[test]
    fn basis_examples() {
        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, -2.0]]);
        let r = verdict(&c, &s);
        let b = steady_state_basis(&c, &s, &r, &Default::default()).unwrap();
        assert_eq!(b.basis.len(), 1);
        assert_abs_diff_eq!(b.basis[0].values.0[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.basis[0].values.0[1], 0.5, epsilon = 1e-15);

        let (c, s) = setup(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 2.0, -1.0]]);
        let r = verdict(&c, &s);
        let b = steady_state_basis(&c, &s, &r, &Default::default()).unwrap();
        assert_eq!(b.free_parameters(), vec!["alpha_0", "alpha_1"]);
        assert_eq!(b.basis[0].values.0, vec![1.0, 0.0, 1.0]);
        assert_eq!(b.basis[1].values.0, vec![0.0, 1.0, 2.0]);

        let (c, s) = setup(&[&[0.0]]);
        let r = verdict(&c, &s);
        let b = steady_state_basis(&c, &s, &r, &Default::default()).unwrap();
        assert_eq!(b.basis[0].values.0, vec![1.0]);
    }

    #[test]
    fn basis_refuses_unless_forced() {
        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let r = verdict(&c, &s);
        assert!(matches!(
            steady_state_basis(&c, &s, &r, &Default::default()),
            Err(Error::NotMarginallyStable(_))
        ));
        let forced = SteadyStateOptions {
            force: true,
            ..Default::default()
        };
        let b = steady_state_basis(&c, &s, &r, &forced).unwrap();
        // Only the downstream critical block is final.
        assert_eq!(b.basis.len(), 1);
        assert_eq!(b.basis[0].values.0, vec![0.0, 1.0]);

        let (c, s) = setup(&[&[-1.0]]);
        let r = verdict(&c, &s);
        assert!(steady_state_basis(&c, &s, &r, &Default::default()).is_err());
    }

    #[test]
    fn path_sum_single_edge_and_chain() {
        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, -2.0]]);
        let p = path_sum_oracle(&c, &s, 1, 0, PATH_ORACLE_MAX_BLOCKS).unwrap();
        assert_eq!(p, DMatrix::from_element(1, 1, 1.0));

        let (c, s) = setup(&[&[0.0, 0.0, 0.0], &[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]]);
        let r = verdict(&c, &s);
        let rec = steady_state_basis(&c, &s, &r, &Default::default()).unwrap();
        let via = steady_state_via_paths(&c, &s, 0, PATH_ORACLE_MAX_BLOCKS).unwrap();
        assert_eq!(rec.basis[0].values.0, vec![1.0, 1.0, 1.0]);
        for (a, b) in rec.basis[0].values.0.iter().zip(&via.0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_sum_diamond() {
        // critical 0 feeds sub 1 and sub 2, both feed sub 3, and 0 feeds 3 directly.
        let s = CooperativeSystem::validate(
            [
                (1, 0, 1.0),
                (2, 0, 2.0),
                (3, 1, 0.5),
                (3, 2, 1.5),
                (3, 0, 0.25),
                (1, 1, -1.0),
                (2, 2, -4.0),
                (3, 3, -2.0),
            ],
            4,
        )
        .unwrap();
        let c = condense(&s);
        let spectra = analyze_all_blocks(&c, &SpectralOptions::default()).unwrap();
        // m1 = 1, m2 = 0.5, m3 = (0.5*1 + 1.5*0.5 + 0.25) / 2 = 0.75
        let p = path_sum_oracle(&c, &spectra, 3, 0, PATH_ORACLE_MAX_BLOCKS).unwrap();
        // P = 0.25 - 0.5*(-1)^-1*1 - 1.5*(-4)^-1*2 = 0.25 + 0.5 + 0.75
        assert_abs_diff_eq!(p[(0, 0)], 1.5, epsilon = 1e-15);
        let via = steady_state_via_paths(&c, &spectra, 0, PATH_ORACLE_MAX_BLOCKS).unwrap();
        assert_abs_diff_eq!(via.0[3], 0.75, epsilon = 1e-15);
        let r = verdict(&c, &spectra);
        let rec = steady_state_basis(&c, &spectra, &r, &Default::default()).unwrap();
        assert_eq!(rec.basis[0].values.0, vec![1.0, 1.0, 0.5, 0.75]);
    }

    #[test]
    fn path_sum_rejects_bad_inputs() {
        let (c, s) = setup(&[&[0.0, 0.0], &[1.0, -2.0]]);
        assert!(matches!(
            path_sum_oracle(&c, &s, 1, 0, 1),
            Err(Error::TooManyBlocks { blocks: 2, limit: 1 })
        ));
        assert_eq!(path_sum_oracle(&c, &s, 0, 1, 12), Err(Error::NotFinalCritical(1)));
    }
}
