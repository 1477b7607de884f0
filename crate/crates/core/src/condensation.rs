//! Strongly connected components of the dependence graph and the block
//! lower-triangular normal form they induce.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::CooperativeSystem;

/// One strongly connected component and its (dense) diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Original node indices, ascending.
    pub nodes: Vec<usize>,
    /// `A` restricted to `nodes` (rows and columns in `nodes` order).
    pub matrix: DMatrix<f64>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Max absolute row sum of the block matrix.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.matrix)
    }
}

/// Dense coupling `C_kl` from source block `l` into target block `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub target_block: usize,
    pub source_block: usize,
    pub matrix: DMatrix<f64>,
}

/// Entries of `C_kl` as `(row in B_k, col in B_l, weight)`.
pub type SparseCoupling = Vec<(usize, usize, f64)>;

/// SCC decomposition of a [`CooperativeSystem`], blocks in topological order.
#[derive(Debug, Clone)]
pub struct Condensation {
    n: usize,
    blocks: Vec<Block>,
    dag_edges: BTreeSet<(usize, usize)>,
    node_to_block: Vec<usize>,
    local_index: Vec<usize>,
    permutation: Vec<usize>,
    couplings: BTreeMap<(usize, usize), SparseCoupling>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

/// Decomposes the dependence graph of `system` into SCCs.
///
/// Blocks come out in a topological order of the condensation (upstream
/// first); ties between independent blocks are broken by the smallest node
/// index they contain, so the result is deterministic.
pub fn condense(system: &CooperativeSystem) -> Condensation {
    let n = system.n();
    let adj = system.successors();
    let comp = tarjan(&adj);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }

    // Component-level DAG for ordering.
    let mut comp_succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
    let mut indegree = vec![0usize; ncomp];
    for (from, tos) in adj.iter().enumerate() {
        for &to in tos {
            let (cf, ct) = (comp[from], comp[to]);
            if cf != ct && comp_succ[cf].insert(ct) {
                indegree[ct] += 1;
            }
        }
    }

    // Kahn's algorithm keyed on the smallest member (members are ascending).
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((members[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(ncomp);
    while let Some(Reverse((_, c))) = heap.pop() {
        order.push(c);
        for &d in &comp_succ[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                heap.push(Reverse((members[d][0], d)));
            }
        }
    }
    debug_assert_eq!(order.len(), ncomp, "condensation must be acyclic");

    let mut node_to_block = vec![0; n];
    let mut local_index = vec![0; n];
    let mut permutation = Vec::with_capacity(n);
    let mut block_nodes = Vec::with_capacity(ncomp);
    for (k, &c) in order.iter().enumerate() {
        for (pos, &v) in members[c].iter().enumerate() {
            node_to_block[v] = k;
            local_index[v] = pos;
            permutation.push(v);
        }
        block_nodes.push(std::mem::take(&mut members[c]));
    }

    let mut matrices: Vec<DMatrix<f64>> = block_nodes
        .iter()
        .map(|nodes| DMatrix::zeros(nodes.len(), nodes.len()))
        .collect();
    let mut couplings: BTreeMap<(usize, usize), SparseCoupling> = BTreeMap::new();
    for (i, j, v) in system.entries() {
        let (k, l) = (node_to_block[i], node_to_block[j]);
        if k == l {
            matrices[k][(local_index[i], local_index[j])] = v;
        } else {
            couplings
                .entry((k, l))
                .or_default()
                .push((local_index[i], local_index[j], v));
        }
    }

    let blocks: Vec<Block> = block_nodes
        .into_iter()
        .zip(matrices)
        .map(|(nodes, matrix)| Block { nodes, matrix })
        .collect();
    let h = blocks.len();
    let dag_edges: BTreeSet<(usize, usize)> = couplings.keys().map(|&(k, l)| (l, k)).collect();
    let mut succ = vec![Vec::new(); h];
    let mut pred = vec![Vec::new(); h];
    for &(l, k) in &dag_edges {
        succ[l].push(k);
        pred[k].push(l);
    }

    Condensation {
        n,
        blocks,
        dag_edges,
        node_to_block,
        local_index,
        permutation,
        couplings,
        succ,
        pred,
    }
}

/// Iterative Tarjan; returns the component id of every vertex.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack: Vec<usize> = Vec::new();
    // (vertex, next neighbour position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, pos)) = call.last() {
            if let Some(&w) = adj[v].get(pos) {
                call.last_mut().expect("non-empty call stack").1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

impl Condensation {
    /// Number of blocks `h`.
    pub fn h(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &Block {
        &self.blocks[k]
    }

    /// `(l, k)` pairs with `l < k`: some edge runs from block `l` into block `k`.
    pub fn dag_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.dag_edges
    }

    pub fn node_to_block(&self) -> &[usize] {
        &self.node_to_block
    }

    /// Position of a node within its block.
    pub fn local_index(&self, node: usize) -> usize {
        self.local_index[node]
    }

    /// Node order that makes `A` block lower-triangular.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Blocks immediately downstream of `l`.
    pub fn successors(&self, l: usize) -> &[usize] {
        &self.succ[l]
    }

    /// Blocks immediately upstream of `k`.
    pub fn predecessors(&self, k: usize) -> &[usize] {
        &self.pred[k]
    }

    /// Sparse entries of `C_kl`, empty when the blocks are not adjacent.
    pub fn coupling_entries(&self, k: usize, l: usize) -> &[(usize, usize, f64)] {
        self.couplings.get(&(k, l)).map_or(&[], Vec::as_slice)
    }

    /// Dense coupling matrix `C_kl` (zero when no edge connects the blocks).
    pub fn extract_coupling(&self, k: usize, l: usize) -> Result<Coupling> {
        let h = self.h();
        for idx in [k, l] {
            if idx >= h {
                return Err(Error::BlockOutOfRange { index: idx, count: h });
            }
        }
        if l >= k {
            return Err(Error::BadBlockOrder {
                target: k,
                source_block: l,
            });
        }
        let mut matrix = DMatrix::zeros(self.blocks[k].size(), self.blocks[l].size());
        for &(r, c, v) in self.coupling_entries(k, l) {
            matrix[(r, c)] = v;
        }
        Ok(Coupling {
            target_block: k,
            source_block: l,
            matrix,
        })
    }

    /// Start offset of each block in permuted order, plus a final `n`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.h() + 1);
        let mut acc = 0;
        out.push(0);
        for b in &self.blocks {
            acc += b.size();
            out.push(acc);
        }
        out
    }

    /// `P A P^T` for the block permutation.
    pub fn permuted_matrix(&self, system: &CooperativeSystem) -> DMatrix<f64> {
        let mut pos = vec![0; self.n];
        for (p, &v) in self.permutation.iter().enumerate() {
            pos[v] = p;
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in system.entries() {
            m[(pos[i], pos[j])] = v;
        }
        m
    }

    /// Full transitive closure of the block DAG.
    pub fn upstream_reachability(&self) -> Reachability {
        let h = self.h();
        let words = h.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; h];
        for l in (0..h).rev() {
            let mut row = vec![0u64; words];
            for &k in &self.succ[l] {
                row[k / 64] |= 1 << (k % 64);
                for (dst, src) in row.iter_mut().zip(&rows[k]) {
                    *dst |= *src;
                }
            }
            rows[l] = row;
        }
        Reachability { h, rows }
    }

    /// Blocks strictly downstream of at least one block in `sources`.
    pub fn downstream_of(&self, sources: &[bool]) -> Vec<bool> {
        self.sweep(sources, &self.succ)
    }

    /// Blocks strictly upstream of at least one block in `targets`.
    pub fn upstream_of(&self, targets: &[bool]) -> Vec<bool> {
        self.sweep(targets, &self.pred)
    }

    fn sweep(&self, seeds: &[bool], next: &[Vec<usize>]) -> Vec<bool> {
        let h = self.h();
        let mut hit = vec![false; h];
        let mut queue: VecDeque<usize> = (0..h).filter(|&b| seeds[b]).collect();
        while let Some(b) = queue.pop_front() {
            for &c in &next[b] {
                if !hit[c] {
                    hit[c] = true;
                    queue.push_back(c);
                }
            }
        }
        hit
    }

    /// Shortest block path from `from` to any block satisfying `is_target`
    /// (excluding `from` itself), via BFS over DAG edges.
    pub fn shortest_path_to(&self, from: usize, is_target: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let h = self.h();
        let mut parent = vec![usize::MAX; h];
        let mut queue = VecDeque::from([from]);
        while let Some(b) = queue.pop_front() {
            for &c in &self.succ[b] {
                if parent[c] != usize::MAX {
                    continue;
                }
                parent[c] = b;
                if is_target(c) {
                    let mut path = vec![c];
                    let mut cur = c;
                    while cur != from {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(c);
            }
        }
        None
    }

    /// All block paths from `from` to `to` (exponential; for small DAGs).
    pub fn all_paths(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = vec![from];
        self.paths_rec(to, &mut path, &mut out);
        out
    }

    fn paths_rec(&self, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().unwrap();
        if cur == to {
            out.push(path.clone());
            return;
        }
        // Topological order: nothing past `to` can lead back to it.
        for &next in self.succ[cur].iter().filter(|&&b| b <= to) {
            path.push(next);
            self.paths_rec(to, path, out);
            path.pop();
        }
    }
}

/// Strict reachability between blocks: `reachable(l, k)` iff a directed
/// path of one or more DAG edges runs from `l` to `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    h: usize,
    rows: Vec<Vec<u64>>,
}

impl Reachability {
    pub fn h(&self) -> usize {
        self.h
    }

    pub fn reachable(&self, from: usize, to: usize) -> bool {
        self.rows[from][to / 64] >> (to % 64) & 1 == 1
    }

    /// All `(from, to)` pairs in the relation, lexicographic.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.h)
            .flat_map(|l| (0..self.h).map(move |k| (l, k)))
            .filter(|&(l, k)| self.reachable(l, k))
            .collect()
    }
}

pub(crate) fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
