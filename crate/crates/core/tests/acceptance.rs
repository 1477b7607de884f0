//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use coopstab::oracle::{
    self, ClassPlan, CompartmentalSpec, DenseOptions, GeneratedSystem, GeneratorSpec, Topology,
};
use coopstab::stability::{steady_state_via_paths, PATH_ORACLE_MAX_BLOCKS};
use coopstab::{
    analyze, trivial_blocks, Analysis, AnalysisOptions, Criticality, CooperativeSystem, StateVector,
    SteadyStateBasis, UnstableReason, Verdict,
};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn plans() -> [(&'static str, ClassPlan); 3] {
    [
        ("sub_only", ClassPlan::sub_only()),
        ("sub_and_critical", ClassPlan::sub_and_critical()),
        ("mixed", ClassPlan::mixed()),
    ]
}

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

/// Marginally stable systems from the generator, with their analysis and basis.
fn marginal_pool(
    want: usize,
    spec_for: impl Fn(u64) -> GeneratorSpec,
) -> Vec<(GeneratedSystem, Analysis, SteadyStateBasis)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < want {
        let g = oracle::generate(&spec_for(seed)).expect("generator spec is valid");
        seed += 1;
        let a = analyze(&g.system, &opts()).expect("analysis succeeds");
        if a.report.verdict != Verdict::MarginallyStable {
            continue;
        }
        let basis = a.steady_state(&Default::default()).expect("basis for marginal system");
        out.push((g, a, basis));
        assert!(seed < 1_000_000, "generator rarely yields marginal systems");
    }
    out
}

fn marginal_spec(seed: u64) -> GeneratorSpec {
    let topo = Topology::ALL_CONNECTED[(seed % 4) as usize];
    GeneratorSpec::family(topo, ClassPlan::sub_and_critical(), seed)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dense = DenseOptions::default();
    let mut total = 0;
    let mut mismatches = Vec::new();
    let mut by_verdict = [0usize; 3];
    for topo in Topology::ALL_CONNECTED {
        for (name, plan) in plans() {
            for seed in 0..84u64 {
                let g = oracle::generate(&GeneratorSpec::family(topo, plan.clone(), seed)).unwrap();
                let a = analyze(&g.system, &opts()).unwrap();
                let d = oracle::dense_verdict(&g.system, &dense).unwrap();
                total += 1;
                by_verdict[match a.report.verdict {
                    Verdict::MarginallyStable => 0,
                    Verdict::AsymptoticallyStable => 1,
                    Verdict::Unstable => 2,
                }] += 1;
                if a.report.verdict != d.verdict {
                    mismatches.push(format!("{topo:?}/{name}/seed {seed}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && total >= 1000 && secs < 120.0,
        format!(
            "{} systems ({} marginal, {} asymptotic, {} unstable), {} mismatches{}, {:.1}s",
            total,
            by_verdict[0],
            by_verdict[1],
            by_verdict[2],
            mismatches.len(),
            mismatches.first().map(|m| format!(" e.g. {m}")).unwrap_or_default(),
            secs
        ),
    )
}

/// Random Metzler matrix with generic (simple) spectrum.
fn random_metzler(rng: &mut ChaCha8Rng) -> CooperativeSystem {
    let n = rng.random_range(1..=12);
    let density = rng.random_range(0.05..0.4);
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                triplets.push((i, i, rng.random_range(-3.0..1.0)));
            } else if rng.random_bool(density) {
                triplets.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    CooperativeSystem::validate(triplets, n).unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let s = random_metzler(&mut rng);
        let a = analyze(&s, &opts()).unwrap();
        let blocks: Vec<Complex<f64>> = a
            .condensation
            .blocks()
            .iter()
            .flat_map(|b| oracle::eigenvalues(&b.matrix))
            .collect();
        let whole = oracle::eigenvalues(&s.to_dense());
        match oracle::match_spectra(&blocks, &whole) {
            Some(err) => {
                worst = worst.max(err);
                if err > 1e-8 {
                    failures += 1;
                }
            }
            None => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("200 systems, worst eigenvalue match error {worst:.2e}"),
    )
}

fn criterion_3(pool: &[(GeneratedSystem, Analysis, SteadyStateBasis)]) -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for (idx, (g, a, basis)) in pool.iter().enumerate() {
        let scale = g.system.norm_inf().max(1.0);
        for v in &basis.basis {
            let am = g.system.apply(&v.values.to_dvector());
            let r = am.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let rel = r / (scale * v.values.norm_inf());
            worst = worst.max(rel);
            if rel > 1e-10 || !v.values.is_nonnegative() {
                bad.push(idx);
            }
        }
        let free = a.report.free_blocks().len();
        let nullity = oracle::nullity(&g.system.to_dense(), DenseOptions::default().rank_tol_rel);
        if basis.basis.len() != free || free != nullity {
            bad.push(idx);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} marginal systems, worst relative residual {:.2e}, {} violations",
            pool.len(),
            worst,
            bad.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 0u64;
    let mut failures = 0;
    while checked < 100 {
        let topo = Topology::ALL_CONNECTED[(seed % 4) as usize];
        let spec = GeneratorSpec {
            blocks: (3, 8),
            block_size: (1, 3),
            max_nodes: 12,
            ..GeneratorSpec::family(topo, ClassPlan::sub_and_critical(), 10_000 + seed)
        };
        seed += 1;
        let g = oracle::generate(&spec).unwrap();
        let a = analyze(&g.system, &opts()).unwrap();
        let c = &a.condensation;
        if a.report.verdict != Verdict::MarginallyStable || c.h() > 8 {
            continue;
        }
        // Only interesting when some free block has something downstream.
        if !a.report.free_blocks().iter().any(|&f| !c.successors(f).is_empty()) {
            continue;
        }
        let basis = a.steady_state(&Default::default()).unwrap();
        for v in &basis.basis {
            let via = steady_state_via_paths(c, &a.spectra, v.block, PATH_ORACLE_MAX_BLOCKS).unwrap();
            let diff = via
                .0
                .iter()
                .zip(&v.values.0)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let rel = diff / v.values.norm_inf();
            worst = worst.max(rel);
            if rel > 1e-10 {
                failures += 1;
            }
        }
        checked += 1;
    }
    outcome(
        failures == 0,
        format!("{checked} condensations (<= 8 blocks), worst relative difference {worst:.2e}"),
    )
}

fn criterion_5(pool: &[(GeneratedSystem, Analysis, SteadyStateBasis)]) -> Outcome {
    let mut failures = 0;
    for (_, a, basis) in pool.iter().take(200) {
        let trivial = trivial_blocks(&a.condensation, &a.spectra).unwrap();
        let zero: BTreeSet<usize> = (0..a.condensation.h())
            .filter(|&k| {
                basis.basis.iter().all(|v| {
                    a.condensation
                        .block(k)
                        .nodes
                        .iter()
                        .all(|&i| v.values.0[i] == 0.0)
                })
            })
            .collect();
        if trivial != zero {
            failures += 1;
        }
    }
    outcome(
        failures == 0 && pool.len() >= 200,
        format!("{} marginal systems, {} mismatched trivial sets", pool.len().min(200), failures),
    )
}

fn criterion_6(pool: &[(GeneratedSystem, Analysis, SteadyStateBasis)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tested = 0;
    let mut passed = 0;
    let mut skipped = 0;
    let mut min_gap = f64::INFINITY;
    let mut worst: f64 = 0.0;
    let mut worst_late: f64 = 0.0;
    // Smallest gap above which every tested system is within tolerance.
    let mut safe_gap: f64 = 0.0;
    let max_err = |a: &StateVector, b: &StateVector| a.0.iter().zip(&b.0).fold(0.0f64, |e, (x, y)| e.max((x - y).abs()));
    for (g, _, basis) in pool {
        let gap = oracle::spectral_gap(&g.system, &DenseOptions::default()).unwrap();
        if gap < 0.05 {
            skipped += 1;
            continue;
        }
        min_gap = min_gap.min(gap);
        let m0 = StateVector((0..g.system.n()).map(|_| rng.random_range(0.0..1.0)).collect());
        let traj = oracle::simulate(&g.system, &m0, &[100.0, 1000.0]).unwrap();
        let p = oracle::nullspace_projection(&g.system, basis).unwrap();
        let target = oracle::project(&p, &m0);
        let err = max_err(&traj[0], &target);
        worst = worst.max(err);
        worst_late = worst_late.max(max_err(&traj[1], &target));
        tested += 1;
        if err <= 1e-6 {
            passed += 1;
        } else {
            safe_gap = safe_gap.max(gap);
        }
    }

    let nil = CooperativeSystem::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
    let a = analyze(&nil, &opts()).unwrap();
    let unstable_path = matches!(a.report.unstable_reason, Some(UnstableReason::CriticalPath { .. }));
    let traj = oracle::simulate(&nil, &StateVector(vec![1.0, 0.0]), &[10.0]).unwrap();
    let m10 = &traj[0].0;
    let nil_ok = unstable_path
        && (m10[0] - 1.0).abs() < 1e-12
        && (m10[1] - 10.0).abs() < 1e-12
        && traj[0].norm_inf() >= 10.0;

    outcome(
        worst <= 1e-6 && tested > 0 && nil_ok,
        format!(
            "{passed}/{tested} systems within 1e-6 at t=100 (min gap {min_gap:.3}, {skipped} below 0.05 skipped), \
             worst |m(100) - P m0| {worst:.2e}, worst at t=1000 {worst_late:.2e}, all pass for gap > {safe_gap:.3}; \
             [[0,0],[1,0]] at t=10 = ({:.6}, {:.6})",
            m10[0], m10[1]
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sizes = BTreeSet::new();
    let mut count = 0;
    let mut failures = 0;
    for seed in 0..50u64 {
        let size = 2 + (seed % 9) as usize;
        let spec = GeneratorSpec {
            block_size: (size, size),
            max_nodes: 10,
            classes: ClassPlan::Explicit(vec![Criticality::Critical]),
            topology: Topology::Isolated,
            ..GeneratorSpec::family(Topology::Isolated, ClassPlan::sub_only(), 70_000 + seed)
        };
        let g = oracle::generate(&spec).unwrap();
        let a = analyze(&g.system, &opts()).unwrap();
        let block = &a.condensation.block(0).matrix;
        sizes.insert(block.nrows());
        match oracle::expm_limit_check(block, &Default::default()) {
            Ok(check) => {
                worst = worst.max(check.residual);
                if check.residual >= 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
        count += 1;
    }
    outcome(
        failures == 0 && sizes.iter().all(|s| (2..=10).contains(s)),
        format!(
            "{count} critical blocks (sizes {:?}..={:?}), worst ||uL - u||/||u|| {worst:.2e}",
            sizes.first().unwrap(),
            sizes.last().unwrap()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let g = oracle::generate_compartmental(&CompartmentalSpec {
            seed,
            ..Default::default()
        })
        .unwrap();
        assert!(coopstab::compartmental::is_compartmental(&g.system, 1e-12));
        let a = analyze(&g.system, &opts()).unwrap();
        let ok = a.report.verdict == Verdict::MarginallyStable
            && a.steady_state(&Default::default())
                .map(|b| b.basis.len() == 1 && b.basis[0].values.is_nonnegative())
                .unwrap_or(false);
        if !ok {
            failures.push(seed);
        }
    }
    outcome(
        failures.is_empty(),
        format!("100 compartmental systems with one trap, {} failures {:?}", failures.len(), failures),
    )
}

fn main() {
    let start = Instant::now();
    let pool = marginal_pool(250, marginal_spec);
    let results = [
        ("1 oracle verdict equivalence", criterion_1()),
        ("2 spectrum union", criterion_2()),
        ("3 steady-state residual and dimension", criterion_3(&pool)),
        ("4 path sums match recursion", criterion_4()),
        ("5 trivial blocks match zero pattern", criterion_5(&pool)),
        ("6 dynamics consistency", criterion_6(&pool)),
        ("7 limit fixes left Perron vector", criterion_7()),
        ("8 compartmental single trap", criterion_8()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
