//! Serialized analysis reports, the human-readable table, and DOT export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::condensation::Condensation;
use crate::spectral::{BlockSpectrum, Criticality, SpectralOptions};
use crate::stability::{StabilityReport, SteadyStateBasis, SteadyStateOptions, UnstableReason, Verdict};
use crate::system::CooperativeSystem;
use crate::Analysis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub crit_tol_rel: f64,
    pub eig_tol: f64,
    pub max_iter: usize,
    pub dense_cutoff: usize,
    pub residual_tol: f64,
}

impl Tolerances {
    pub fn new(spectral: &SpectralOptions, steady: &SteadyStateOptions) -> Self {
        Self {
            crit_tol_rel: spectral.crit_tol_rel,
            eig_tol: spectral.eig_tol,
            max_iter: spectral.max_iter,
            dense_cutoff: spectral.dense_cutoff,
            residual_tol: steady.residual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub k: usize,
    pub size: usize,
    pub nodes: Vec<String>,
    pub mu: f64,
    pub tau: f64,
    pub class: Criticality,
    pub trivial: Option<bool>,
    pub free: bool,
}

/// Machine-readable analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tolerances: Tolerances,
    pub n: usize,
    pub verdict: Verdict,
    pub unstable_reason: Option<UnstableReason>,
    pub algebraic_multiplicity_zero: usize,
    pub geometric_multiplicity_zero: usize,
    pub blocks: Vec<BlockRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<SteadyStateBasis>,
}

impl Report {
    pub fn build(
        system: &CooperativeSystem,
        analysis: &Analysis,
        tolerances: Tolerances,
        basis: Option<SteadyStateBasis>,
    ) -> Self {
        let labels = system.labels();
        let r = &analysis.report;
        let blocks = analysis
            .condensation
            .blocks()
            .iter()
            .zip(&analysis.spectra)
            .zip(&r.roles)
            .enumerate()
            .map(|(k, ((b, s), role))| BlockRow {
                k,
                size: b.size(),
                nodes: b.nodes.iter().map(|&v| labels[v].clone()).collect(),
                mu: s.mu,
                tau: s.tolerance_used,
                class: s.classification,
                trivial: role.is_trivial,
                free: role.is_free(),
            })
            .collect();
        Self {
            tolerances,
            n: system.n(),
            verdict: r.verdict,
            unstable_reason: r.unstable_reason.clone(),
            algebraic_multiplicity_zero: r.algebraic_multiplicity_zero,
            geometric_multiplicity_zero: r.geometric_multiplicity_zero,
            blocks,
            basis,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary table.
    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        let t = &self.tolerances;
        let _ = writeln!(
            out,
            "# crit_tol_rel={:e} eig_tol={:e} residual_tol={:e} max_iter={} dense_cutoff={}",
            t.crit_tol_rel, t.eig_tol, t.residual_tol, t.max_iter, t.dense_cutoff
        );
        let critical = self
            .blocks
            .iter()
            .filter(|b| b.class == Criticality::Critical)
            .count();
        let _ = writeln!(
            out,
            "verdict: {}, {} critical block{}",
            self.verdict.as_str(),
            critical,
            if critical == 1 { "" } else { "s" }
        );
        let _ = writeln!(
            out,
            "multiplicity of eigenvalue 0: algebraic {}, geometric {}",
            self.algebraic_multiplicity_zero, self.geometric_multiplicity_zero
        );
        if let Some(reason) = &self.unstable_reason {
            let _ = writeln!(out, "reason: {}", describe_reason(reason));
        }
        let _ = writeln!(
            out,
            "{:>4} {:>5} {:>14} {:>10} {:<13} {:<7} {:<5} nodes",
            "k", "size", "mu", "tau", "class", "trivial", "free"
        );
        for b in &self.blocks {
            let trivial = match b.trivial {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:>4} {:>5} {:>14.6e} {:>10.1e} {:<13} {:<7} {:<5} {}",
                b.k,
                b.size,
                b.mu,
                b.tau,
                b.class.as_str(),
                trivial,
                if b.free { "yes" } else { "no" },
                b.nodes.join(",")
            );
        }
        if let Some(basis) = &self.basis {
            for v in &basis.basis {
                let values: Vec<String> = v.values.0.iter().map(|x| format!("{x:.6e}")).collect();
                let _ = writeln!(
                    out,
                    "{} (block {}): [{}] residual {:.1e}",
                    v.alpha,
                    v.block,
                    values.join(", "),
                    v.residual
                );
            }
        }
        out
    }
}

pub fn describe_reason(reason: &UnstableReason) -> String {
    match reason {
        UnstableReason::SuperCriticalBlock { block } => format!("super-critical block B{block}"),
        UnstableReason::CriticalPath { path, .. } => {
            let hops: Vec<String> = path.iter().map(|b| format!("B{b}")).collect();
            format!("critical blocks connected by path {}", hops.join("->"))
        }
    }
}

/// Graphviz rendering of the condensation. Spectral data and roles are
/// optional; without them nodes carry only their size.
pub fn to_dot(
    c: &Condensation,
    spectra: Option<&[BlockSpectrum]>,
    report: Option<&StabilityReport>,
) -> String {
    let mut out = String::new();
    if let Some(r) = report {
        let mut banner = format!("// verdict: {}", r.verdict.as_str());
        if let Some(reason) = &r.unstable_reason {
            let _ = write!(banner, " ({})", describe_reason(reason));
        }
        let _ = writeln!(out, "{banner}");
    }
    let _ = writeln!(out, "digraph condensation {{");
    let _ = writeln!(out, "  node [shape=circle, style=filled, fillcolor=white];");
    for (k, block) in c.blocks().iter().enumerate() {
        let mut attrs = Vec::new();
        match spectra.map(|s| &s[k]) {
            Some(s) => {
                attrs.push(format!(
                    "label=\"B{k} ({}, {:.4e}, {})\"",
                    block.size(),
                    s.mu,
                    s.classification.as_str()
                ));
                let color = match s.classification {
                    Criticality::SubCritical => "grey",
                    Criticality::Critical => "blue",
                    Criticality::SuperCritical => "red",
                };
                attrs.push(format!("fillcolor={color}"));
            }
            None => attrs.push(format!("label=\"B{k} ({})\"", block.size())),
        }
        let trivial = report
            .and_then(|r| r.roles[k].is_trivial)
            .unwrap_or(false);
        if trivial {
            attrs.push("style=\"filled,dashed\"".to_string());
        }
        let _ = writeln!(out, "  B{k} [{}];", attrs.join(", "));
    }
    for &(l, k) in c.dag_edges() {
        let _ = writeln!(out, "  B{l} -> B{k};");
    }
    let _ = writeln!(out, "}}");
    out
}
