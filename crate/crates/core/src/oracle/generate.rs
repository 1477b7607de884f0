//! Seeded random cooperative systems with planted block structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Criticality;
use crate::system::CooperativeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// No edges between blocks.
    Isolated,
    Chain,
    /// One source fanning out to parallel middles that merge into one sink.
    Diamond,
    /// Every block has at most one upstream parent.
    Forest,
    RandomDag,
}

impl Topology {
    pub const ALL_CONNECTED: [Topology; 4] = [
        Topology::Chain,
        Topology::Diamond,
        Topology::Forest,
        Topology::RandomDag,
    ];
}

/// How planted classes are assigned to blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassPlan {
    /// One class per block; fixes the block count.
    Explicit(Vec<Criticality>),
    /// Independent draws per block; at most `max_critical` critical blocks.
    Mix {
        critical: f64,
        super_critical: f64,
        max_critical: usize,
    },
}

impl ClassPlan {
    pub fn sub_only() -> Self {
        ClassPlan::Mix {
            critical: 0.0,
            super_critical: 0.0,
            max_critical: 0,
        }
    }

    pub fn sub_and_critical() -> Self {
        ClassPlan::Mix {
            critical: 0.4,
            super_critical: 0.0,
            max_critical: 3,
        }
    }

    pub fn mixed() -> Self {
        ClassPlan::Mix {
            critical: 0.3,
            super_critical: 0.15,
            max_critical: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Inclusive range for the number of blocks (ignored for explicit plans).
    pub blocks: (usize, usize),
    /// Inclusive range of block sizes.
    pub block_size: (usize, usize),
    /// Upper bound on the total node count.
    pub max_nodes: usize,
    pub topology: Topology,
    pub classes: ClassPlan,
    /// Probability of each extra intra-block edge beyond the spanning cycle.
    pub intra_density: f64,
    /// Probability of each extra node pair on a connected block pair.
    pub inter_density: f64,
    /// Probability of a block-DAG edge for `RandomDag`.
    pub dag_density: f64,
    /// Edge weight range.
    pub rate: (f64, f64),
    /// Range of `|mu|` for sub- and super-critical blocks.
    pub margin: (f64, f64),
    /// Randomly relabel nodes so blocks are not contiguous.
    pub scramble: bool,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            blocks: (1, 6),
            block_size: (1, 4),
            max_nodes: 12,
            topology: Topology::RandomDag,
            classes: ClassPlan::mixed(),
            intra_density: 0.3,
            inter_density: 0.2,
            dag_density: 0.4,
            rate: (0.2, 2.0),
            margin: (0.1, 1.5),
            scramble: true,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn family(topology: Topology, classes: ClassPlan, seed: u64) -> Self {
        Self {
            topology,
            classes,
            seed,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InfeasibleSpec(msg.into()));
        if self.blocks.0 == 0 || self.blocks.0 > self.blocks.1 {
            return bad("block count range must be non-empty and start at 1 or more");
        }
        if self.block_size.0 == 0 || self.block_size.0 > self.block_size.1 {
            return bad("block size range must be non-empty and start at 1 or more");
        }
        if self.max_nodes == 0 {
            return bad("max_nodes must be positive");
        }
        if !(self.rate.0 > 0.0 && self.rate.0 <= self.rate.1) {
            return bad("rate range must be positive and ordered");
        }
        if !(self.margin.0 > 0.0 && self.margin.0 <= self.margin.1) {
            return bad("margin range must be positive and ordered");
        }
        for p in [self.intra_density, self.inter_density, self.dag_density] {
            if !(0.0..=1.0).contains(&p) {
                return bad("densities must lie in [0, 1]");
            }
        }
        match &self.classes {
            ClassPlan::Explicit(v) if v.is_empty() => bad("explicit class plan is empty"),
            ClassPlan::Explicit(v) if v.len() > self.max_nodes => bad("more blocks than max_nodes"),
            ClassPlan::Mix {
                critical,
                super_critical,
                ..
            } if *critical < 0.0 || *super_critical < 0.0 || critical + super_critical > 1.0 => {
                bad("class probabilities must be non-negative and sum to at most 1")
            }
            _ => Ok(()),
        }
    }
}

/// One planted block of a generated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBlock {
    /// Node indices in the generated system (after scrambling).
    pub nodes: Vec<usize>,
    pub class: Criticality,
    /// Exact dominant eigenvalue by construction.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedSystem {
    pub system: CooperativeSystem,
    /// Blocks in planted (topological) order.
    pub planted: Vec<PlantedBlock>,
    /// Planted block-DAG edges `(upstream, downstream)`.
    pub dag: Vec<(usize, usize)>,
}

/// Builds a random Metzler matrix with the planted block classes and DAG.
///
/// Critical blocks are zero-row-sum matrices conjugated by a random positive
/// diagonal scaling, so their dominant eigenvalue is exactly zero with a
/// non-constant Perron vector. Sub- and super-critical blocks are the same
/// construction shifted by the planted `mu`.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedSystem> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (classes, sizes) = plan_blocks(spec, &mut rng);
    let h = classes.len();
    let mut triplets = Vec::new();
    let mut offsets = Vec::with_capacity(h + 1);
    offsets.push(0);
    let mut planted = Vec::with_capacity(h);
    for (&class, &size) in classes.iter().zip(&sizes) {
        let start = *offsets.last().unwrap();
        let mu = match class {
            Criticality::Critical => 0.0,
            Criticality::SubCritical => -rng.random_range(spec.margin.0..=spec.margin.1),
            Criticality::SuperCritical => rng.random_range(spec.margin.0..=spec.margin.1),
        };
        let block = planted_block(size, mu, spec, &mut rng);
        for i in 0..size {
            for j in 0..size {
                if block[i][j] != 0.0 {
                    triplets.push((start + i, start + j, block[i][j]));
                }
            }
        }
        offsets.push(start + size);
        planted.push(PlantedBlock {
            nodes: (start..start + size).collect(),
            class,
            mu,
        });
    }

    let dag = block_dag(spec, h, &mut rng);
    for &(l, k) in &dag {
        wire_blocks(
            (offsets[l], offsets[l + 1]),
            (offsets[k], offsets[k + 1]),
            spec.rate,
            spec.inter_density,
            &mut rng,
            &mut triplets,
        );
    }

    let n = offsets[h];
    let relabel = relabeling(n, spec.scramble, &mut rng);
    for block in &mut planted {
        for v in &mut block.nodes {
            *v = relabel[*v];
        }
        block.nodes.sort_unstable();
    }
    let system = CooperativeSystem::validate(
        triplets.into_iter().map(|(i, j, v)| (relabel[i], relabel[j], v)),
        n,
    )?;
    Ok(GeneratedSystem { system, planted, dag })
}

fn plan_blocks(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> (Vec<Criticality>, Vec<usize>) {
    let mut classes = match &spec.classes {
        ClassPlan::Explicit(v) => v.clone(),
        ClassPlan::Mix {
            critical,
            super_critical,
            max_critical,
        } => {
            let h = rng.random_range(spec.blocks.0..=spec.blocks.1).min(spec.max_nodes);
            let mut n_crit = 0;
            (0..h)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < *critical && n_crit < *max_critical {
                        n_crit += 1;
                        Criticality::Critical
                    } else if u >= *critical && u < critical + super_critical {
                        Criticality::SuperCritical
                    } else {
                        Criticality::SubCritical
                    }
                })
                .collect()
        }
    };
    let mut sizes: Vec<usize> = classes
        .iter()
        .map(|_| rng.random_range(spec.block_size.0..=spec.block_size.1))
        .collect();
    // Shrink the largest blocks until everything fits.
    while sizes.iter().sum::<usize>() > spec.max_nodes {
        let (idx, _) = sizes.iter().enumerate().max_by_key(|(_, &s)| s).unwrap();
        if sizes[idx] > 1 {
            sizes[idx] -= 1;
        } else {
            sizes.pop();
            classes.pop();
        }
    }
    (classes, sizes)
}

/// Dense `size x size` block with dominant eigenvalue exactly `mu`.
fn planted_block(size: usize, mu: f64, spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; size]; size];
    if size > 1 {
        // Spanning cycle for irreducibility, edge i -> i+1 stored at [i+1][i].
        for i in 0..size {
            b[(i + 1) % size][i] = rng.random_range(spec.rate.0..=spec.rate.1);
        }
        for i in 0..size {
            for j in 0..size {
                if i != j && b[i][j] == 0.0 && rng.random_bool(spec.intra_density) {
                    b[i][j] = rng.random_range(spec.rate.0..=spec.rate.1);
                }
            }
        }
        for (i, row) in b.iter_mut().enumerate() {
            let off: f64 = row.iter().sum();
            row[i] = -off;
        }
        let scale: Vec<f64> = (0..size).map(|_| rng.random_range(0.5..=2.0)).collect();
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    b[i][j] *= scale[i] / scale[j];
                }
            }
        }
    }
    for (i, row) in b.iter_mut().enumerate() {
        row[i] += mu;
    }
    b
}

fn block_dag(spec: &GeneratorSpec, h: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut dag = Vec::new();
    match spec.topology {
        Topology::Isolated => {}
        Topology::Chain => dag.extend((1..h).map(|k| (k - 1, k))),
        Topology::Diamond if h <= 2 => dag.extend((1..h).map(|k| (k - 1, k))),
        Topology::Diamond => {
            for m in 1..h - 1 {
                dag.push((0, m));
                dag.push((m, h - 1));
            }
        }
        Topology::Forest => {
            for k in 1..h {
                if rng.random_bool(0.8) {
                    dag.push((rng.random_range(0..k), k));
                }
            }
        }
        Topology::RandomDag => {
            for l in 0..h {
                for k in l + 1..h {
                    if rng.random_bool(spec.dag_density) {
                        dag.push((l, k));
                    }
                }
            }
        }
    }
    dag
}

/// At least one edge from a node range `from` into `to`, plus random extras.
fn wire_blocks(
    from: (usize, usize),
    to: (usize, usize),
    rate: (f64, f64),
    density: f64,
    rng: &mut ChaCha8Rng,
    triplets: &mut Vec<(usize, usize, f64)>,
) {
    let src = rng.random_range(from.0..from.1);
    let dst = rng.random_range(to.0..to.1);
    for j in from.0..from.1 {
        for i in to.0..to.1 {
            if (i == dst && j == src) || rng.random_bool(density) {
                triplets.push((i, j, rng.random_range(rate.0..=rate.1)));
            }
        }
    }
}

fn relabeling(n: usize, scramble: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if scramble {
        perm.shuffle(rng);
    }
    perm
}

// ---------------------------------------------------------------------------
// Compartmental systems

/// Random compartmental systems (non-positive column sums) with exactly one
/// trap: a closed block with no outflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompartmentalSpec {
    pub blocks: (usize, usize),
    pub block_size: (usize, usize),
    pub max_nodes: usize,
    pub intra_density: f64,
    pub inter_density: f64,
    pub dag_density: f64,
    pub rate: (f64, f64),
    /// Range of excretion rates out of the system.
    pub excretion: (f64, f64),
    pub seed: u64,
}

impl Default for CompartmentalSpec {
    fn default() -> Self {
        Self {
            blocks: (1, 6),
            block_size: (1, 4),
            max_nodes: 12,
            intra_density: 0.3,
            inter_density: 0.2,
            dag_density: 0.4,
            rate: (0.2, 2.0),
            excretion: (0.05, 0.5),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedCompartmental {
    pub system: CooperativeSystem,
    /// Nodes of the unique trap.
    pub trap: Vec<usize>,
}

pub fn generate_compartmental(spec: &CompartmentalSpec) -> Result<GeneratedCompartmental> {
    let as_generator = GeneratorSpec {
        blocks: spec.blocks,
        block_size: spec.block_size,
        max_nodes: spec.max_nodes,
        rate: spec.rate,
        intra_density: spec.intra_density,
        inter_density: spec.inter_density,
        dag_density: spec.dag_density,
        classes: ClassPlan::sub_only(),
        ..Default::default()
    };
    as_generator.check()?;
    if !(spec.excretion.0 > 0.0 && spec.excretion.0 <= spec.excretion.1) {
        return Err(Error::InfeasibleSpec("excretion range must be positive and ordered".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (classes, sizes) = plan_blocks(&as_generator, &mut rng);
    let h = classes.len();
    let mut offsets = vec![0];
    for s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let n = offsets[h];

    let mut a = vec![vec![0.0; n]; n];
    for k in 0..h {
        let (start, size) = (offsets[k], sizes[k]);
        if size > 1 {
            for i in 0..size {
                a[start + (i + 1) % size][start + i] = rng.random_range(spec.rate.0..=spec.rate.1);
            }
            for i in 0..size {
                for j in 0..size {
                    if i != j && a[start + i][start + j] == 0.0 && rng.random_bool(spec.intra_density) {
                        a[start + i][start + j] = rng.random_range(spec.rate.0..=spec.rate.1);
                    }
                }
            }
        }
    }

    let trap = rng.random_range(0..h);
    let dag: Vec<(usize, usize)> = block_dag(&as_generator, h, &mut rng)
        .into_iter()
        .filter(|&(l, _)| l != trap)
        .collect();
    let mut inter = Vec::new();
    for &(l, k) in &dag {
        wire_blocks(
            (offsets[l], offsets[l + 1]),
            (offsets[k], offsets[k + 1]),
            spec.rate,
            spec.inter_density,
            &mut rng,
            &mut inter,
        );
    }
    for (i, j, v) in inter {
        a[i][j] = v;
    }

    // Excretion: none from the trap; every other closed block must leak.
    let mut excretion = vec![0.0; n];
    for k in (0..h).filter(|&k| k != trap) {
        let mut any = false;
        for node in offsets[k]..offsets[k + 1] {
            if rng.random_bool(0.5) {
                excretion[node] = rng.random_range(spec.excretion.0..=spec.excretion.1);
                any = true;
            }
        }
        let closed = !dag.iter().any(|&(l, _)| l == k);
        if closed && !any {
            let node = rng.random_range(offsets[k]..offsets[k + 1]);
            excretion[node] = rng.random_range(spec.excretion.0..=spec.excretion.1);
        }
    }
    for j in 0..n {
        let outflow: f64 = (0..n).filter(|&i| i != j).map(|i| a[i][j]).sum();
        a[j][j] = -outflow - excretion[j];
    }

    let relabel = relabeling(n, true, &mut rng);
    let triplets = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a[i][j] != 0.0)
        .map(|(i, j)| (relabel[i], relabel[j], a[i][j]));
    let system = CooperativeSystem::validate(triplets, n)?;
    let mut trap_nodes: Vec<usize> = (offsets[trap]..offsets[trap + 1]).map(|v| relabel[v]).collect();
    trap_nodes.sort_unstable();
    Ok(GeneratedCompartmental {
        system,
        trap: trap_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_isolated_critical_singletons() {
        let spec = GeneratorSpec {
            topology: Topology::Isolated,
            classes: ClassPlan::Explicit(vec![Criticality::Critical, Criticality::Critical]),
            block_size: (1, 1),
            scramble: false,
            ..Default::default()
        };
        let g = generate(&spec).unwrap();
        assert_eq!(g.system.n(), 2);
        assert_eq!(g.system.nnz(), 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GeneratorSpec {
            topology: Topology::Chain,
            classes: ClassPlan::Explicit(vec![Criticality::Critical, Criticality::SubCritical]),
            seed: 42,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.system, b.system);
        let other = generate(&GeneratorSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.system, other.system);
    }

    #[test]
    fn generated_matrices_are_metzler_and_bounded() {
        for seed in 0..50 {
            let g = generate(&GeneratorSpec { seed, ..Default::default() }).unwrap();
            assert!(g.system.n() <= 12);
            assert!(g.system.entries().all(|(i, j, v)| i == j || v > 0.0));
        }
    }

    #[test]
    fn compartmental_column_sums() {
        for seed in 0..50 {
            let g = generate_compartmental(&CompartmentalSpec { seed, ..Default::default() }).unwrap();
            let a = g.system.to_dense();
            for j in 0..a.ncols() {
                let col: f64 = a.column(j).sum();
                assert!(col <= 1e-12, "column {j} sums to {col}");
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        let bad = GeneratorSpec {
            block_size: (3, 1),
            ..Default::default()
        };
        assert!(matches!(generate(&bad), Err(Error::InfeasibleSpec(_))));
        let bad = GeneratorSpec {
            classes: ClassPlan::Mix {
                critical: 0.8,
                super_critical: 0.8,
                max_critical: 1,
            },
            ..Default::default()
        };
        assert!(matches!(generate(&bad), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn spec_from_json() {
        let spec: GeneratorSpec = serde_json::from_str(
            r#"{"topology":"diamond","classes":{"explicit":["Critical","SubCritical","SubCritical","SubCritical"]},"seed":7}"#,
        )
        .unwrap();
        let g = generate(&spec).unwrap();
        assert_eq!(g.planted.len(), 4);
        assert_eq!(g.dag, vec![(0, 1), (1, 3), (0, 2), (2, 3)]);
    }
}
