//! The linear cooperative system `dm/dt = A m` and its file formats.
//!
//! Entry `a_ij` is the influence of node `j` on node `i`: the dependence
//! graph carries an edge `j -> i` whenever `a_ij != 0` and `i != j`.
//! Diagonal entries are self-weights and never graph edges.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated Metzler matrix together with optional node labels.
///
/// Immutable after construction; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CooperativeSystem {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
    labels: Vec<String>,
}

impl CooperativeSystem {
    /// Validates raw `(row, col, value)` triplets for an `n`-node system.
    ///
    /// Explicit zeros are dropped; duplicates are rejected even when one of
    /// them is zero.
    pub fn validate<I>(raw_entries: I, n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        let mut entries = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for (row, col, value) in raw_entries {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfRange { row, col, n });
            }
            if !seen.insert((row, col)) {
                return Err(Error::DuplicateEntry { row, col });
            }
            if !value.is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
            if row != col && value < 0.0 {
                return Err(Error::NegativeOffDiagonal { row, col, value });
            }
            if value != 0.0 {
                entries.insert((row, col), value);
            }
        }
        Ok(Self {
            n,
            entries,
            labels: default_labels(n),
        })
    }

    /// Builds a system from a dense row-major matrix.
    pub fn from_dense(matrix: &DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NonSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        let triplets = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        Self::validate(triplets.map(|(i, j)| (i, j, matrix[(i, j)])), n)
    }

    /// Builds a system from nested rows, mostly useful in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        Self::validate(triplets, n)
    }

    /// Replaces the default `"0".."n-1"` labels.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelCountMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `a_ij`, zero when absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.get(&(row, col)).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Dependence-graph edges `(from, to)`, i.e. `(j, i)` for every
    /// off-diagonal `a_ij != 0`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries()
            .filter(|&(i, j, _)| i != j)
            .map(|(i, j, v)| (j, i, v))
    }

    /// Out-adjacency lists of the dependence graph.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (from, to, _) in self.edges() {
            adj[from].push(to);
        }
        adj
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for (i, _, v) in self.entries() {
            rows[i] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `A x` using the sparse entries.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for (i, j, v) in self.entries() {
            y[i] += v * x[j];
        }
        y
    }

    /// Resolves a node reference given either as an index or a label.
    pub fn resolve(&self, node: &NodeRef) -> Result<usize> {
        resolve_node(node, &self.labels, self.n)
    }

    /// Matrix Market coordinate text (real, general, 1-based).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, self.nnz());
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
        }
        out
    }

    /// Edge-list JSON document equivalent to this system.
    pub fn to_edge_list(&self) -> EdgeListDoc {
        let labels = if self.labels == default_labels(self.n) {
            None
        } else {
            Some(self.labels.clone())
        };
        EdgeListDoc {
            n: self.n,
            labels,
            edges: self
                .edges()
                .map(|(from, to, weight)| EdgeRecord {
                    from: NodeRef::Index(from),
                    to: NodeRef::Index(to),
                    weight,
                })
                .collect(),
            self_weights: self
                .entries()
                .filter(|&(i, j, _)| i == j)
                .map(|(i, _, weight)| SelfRecord {
                    node: NodeRef::Index(i),
                    weight,
                })
                .collect(),
        }
    }

    pub fn to_edge_list_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_edge_list()).expect("edge list serializes")
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn resolve_node(node: &NodeRef, labels: &[String], n: usize) -> Result<usize> {
    match node {
        NodeRef::Index(i) if *i < n => Ok(*i),
        NodeRef::Index(i) => Err(Error::IndexOutOfRange {
            row: *i,
            col: *i,
            n,
        }),
        NodeRef::Label(name) => labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::UnknownLabel(name.clone())),
    }
}

/// A mass distribution over the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn uniform(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                found: self.0.len(),
            })
        }
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    /// Parses whitespace- or comma-separated numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    reason: format!("invalid number `{tok}`"),
                })?;
                values.push(v);
            }
        }
        Ok(Self(values))
    }
}

impl From<DVector<f64>> for StateVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v.iter().copied().collect())
    }
}

// ---------------------------------------------------------------------------
// Matrix Market

/// Parses Matrix Market coordinate text (real or integer, general).
///
/// The `%%MatrixMarket` banner is optional; when absent the data is read as
/// real general coordinate data.
pub fn load_matrix_market(text: &str) -> Result<CooperativeSystem> {
    let mut lines = text.lines().enumerate().peekable();

    if let Some((_, first)) = lines.peek() {
        if first.trim_start().starts_with("%%") {
            let (lineno, banner) = lines.next().unwrap();
            check_banner(banner, lineno + 1)?;
        }
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut last_line = 0;
    for (lineno, raw) in lines {
        let line = raw.trim();
        last_line = lineno + 1;
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "size line must be `rows cols nnz`"));
                }
                let rows = parse_usize(fields[0], lineno)?;
                let cols = parse_usize(fields[1], lineno)?;
                let nnz = parse_usize(fields[2], lineno)?;
                if rows != cols {
                    return Err(Error::NonSquare { rows, cols });
                }
                size = Some((rows, cols, nnz));
            }
            Some((n, _, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "entry line must be `row col value`"));
                }
                if triplets.len() == nnz {
                    return Err(parse_err(lineno, "more entries than declared"));
                }
                let i = parse_usize(fields[0], lineno)?;
                let j = parse_usize(fields[1], lineno)?;
                if i == 0 || j == 0 {
                    return Err(parse_err(lineno, "indices are 1-based"));
                }
                if i > n || j > n {
                    return Err(Error::IndexOutOfRange {
                        row: i - 1,
                        col: j - 1,
                        n,
                    });
                }
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, &format!("invalid value `{}`", fields[2])))?;
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let Some((n, _, nnz)) = size else {
        return Err(parse_err(last_line.saturating_sub(1), "missing size line"));
    };
    if triplets.len() != nnz {
        return Err(parse_err(
            last_line.saturating_sub(1),
            &format!("declared {nnz} entries, found {}", triplets.len()),
        ));
    }
    CooperativeSystem::validate(triplets, n)
}

fn check_banner(banner: &str, line: usize) -> Result<()> {
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let bad = |reason: &str| Error::Parse {
        line,
        reason: reason.to_string(),
    };
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad("malformed %%MatrixMarket banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(bad("only coordinate format is supported"));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(bad("only real or integer fields are supported"));
    }
    if tokens[4] != "general" {
        return Err(bad("only general symmetry is supported"));
    }
    Ok(())
}

fn parse_usize(tok: &str, lineno: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(lineno, &format!("invalid integer `{tok}`")))
}

fn parse_err(lineno: usize, reason: &str) -> Error {
    Error::Parse {
        line: lineno + 1,
        reason: reason.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Edge-list JSON

/// A node given by index or by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: NodeRef,
    pub to: NodeRef,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfRecord {
    pub node: NodeRef,
    #[serde(alias = "self_weight")]
    pub weight: f64,
}

/// On-disk edge-list document: `n`, optional `labels`, `edges`, `self`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeListDoc {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    #[serde(default, rename = "self")]
    pub self_weights: Vec<SelfRecord>,
}

impl EdgeListDoc {
    pub fn into_system(self) -> Result<CooperativeSystem> {
        if self.n == 0 {
            return Err(Error::EmptySystem);
        }
        let labels = match self.labels {
            Some(l) if l.len() != self.n => {
                return Err(Error::LabelCountMismatch {
                    expected: self.n,
                    found: l.len(),
                })
            }
            Some(l) => l,
            None => default_labels(self.n),
        };
        let mut triplets = Vec::with_capacity(self.edges.len() + self.self_weights.len());
        for edge in &self.edges {
            let from = resolve_node(&edge.from, &labels, self.n)?;
            let to = resolve_node(&edge.to, &labels, self.n)?;
            if edge.weight == 0.0 {
                return Err(Error::ZeroWeightEdge { from, to });
            }
            triplets.push((to, from, edge.weight));
        }
        for rec in &self.self_weights {
            let node = resolve_node(&rec.node, &labels, self.n)?;
            triplets.push((node, node, rec.weight));
        }
        CooperativeSystem::validate(triplets, self.n)?.with_labels(labels)
    }
}

/// Parses the edge-list JSON format.
pub fn load_edge_list_json(text: &str) -> Result<CooperativeSystem> {
    let doc: EdgeListDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    })?;
    doc.into_system()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_is_valid() {
        let s = CooperativeSystem::validate([(0, 0, -1.0)], 1).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.get(0, 0), -1.0);
        assert_eq!(s.edges().count(), 0);
    }

    #[test]
    fn negative_off_diagonal_rejected() {
        let err = CooperativeSystem::validate([(0, 1, -0.5)], 2).unwrap_err();
        assert_eq!(
            err,
            Error::NegativeOffDiagonal {
                row: 0,
                col: 1,
                value: -0.5
            }
        );
    }

    #[test]
    fn lower_entry_is_edge_from_column_to_row() {
        let s = CooperativeSystem::validate([(1, 0, 1.0), (1, 1, -2.0)], 2).unwrap();
        let edges: Vec<_> = s.edges().collect();
        assert_eq!(edges, vec![(0, 1, 1.0)]);
    }

    #[test]
    fn out_of_range_and_duplicates() {
        assert!(matches!(
            CooperativeSystem::validate([(2, 0, 1.0)], 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert_eq!(
            CooperativeSystem::validate([(1, 0, 1.0), (1, 0, 0.0)], 2),
            Err(Error::DuplicateEntry { row: 1, col: 0 })
        );
        assert_eq!(
            CooperativeSystem::validate(std::iter::empty(), 0),
            Err(Error::EmptySystem)
        );
    }

    #[test]
    fn explicit_zero_is_dropped() {
        let s = CooperativeSystem::validate([(1, 0, 0.0), (0, 0, -1.0)], 2).unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.edges().count(), 0);
    }

    #[test]
    fn matrix_market_basic() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 -1\n2 1 1\n";
        let s = load_matrix_market(text).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.get(0, 0), -1.0);
        assert_eq!(s.get(1, 0), 1.0);
    }

    #[test]
    fn matrix_market_errors() {
        let non_square = "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n";
        assert_eq!(
            load_matrix_market(non_square),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        );
        let negative = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 -3\n";
        assert!(matches!(
            load_matrix_market(negative),
            Err(Error::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 3\n";
        assert!(matches!(load_matrix_market(short), Err(Error::Parse { .. })));
        let garbage = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 3\n";
        assert_eq!(
            load_matrix_market(garbage),
            Err(Error::Parse {
                line: 3,
                reason: "invalid integer `x`".into()
            })
        );
        let symmetric = "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 3\n";
        assert!(matches!(load_matrix_market(symmetric), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn matrix_market_comments_and_no_banner() {
        let text = "% comment\n2 2 1\n% another\n2 1 0.5\n";
        let s = load_matrix_market(text).unwrap();
        assert_eq!(s.get(1, 0), 0.5);
    }

    #[test]
    fn edge_list_basic() {
        let text = r#"{"n":2,"edges":[{"from":0,"to":1,"weight":1}],"self":[{"node":1,"weight":-2}]}"#;
        let s = load_edge_list_json(text).unwrap();
        assert_eq!(s.get(1, 0), 1.0);
        assert_eq!(s.get(1, 1), -2.0);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn edge_list_empty_system() {
        let s = load_edge_list_json(r#"{"n":1,"edges":[],"self":[]}"#).unwrap();
        assert_eq!(s.to_dense(), DMatrix::from_element(1, 1, 0.0));
    }

    #[test]
    fn edge_list_zero_weight_rejected() {
        let text = r#"{"n":2,"edges":[{"from":0,"to":1,"weight":0}],"self":[]}"#;
        assert_eq!(
            load_edge_list_json(text),
            Err(Error::ZeroWeightEdge { from: 0, to: 1 })
        );
    }

    #[test]
    fn edge_list_labels() {
        let text = r#"{"n":2,"labels":["stem","diff"],
            "edges":[{"from":"stem","to":"diff","weight":0.3}],
            "self":[{"node":"diff","self_weight":-1}]}"#;
        let s = load_edge_list_json(text).unwrap();
        assert_eq!(s.get(1, 0), 0.3);
        assert_eq!(s.get(1, 1), -1.0);
        assert_eq!(s.labels(), ["stem", "diff"]);

        let unknown = r#"{"n":2,"labels":["a","b"],"edges":[{"from":"a","to":"c","weight":1}]}"#;
        assert_eq!(
            load_edge_list_json(unknown),
            Err(Error::UnknownLabel("c".into()))
        );
    }

    #[test]
    fn state_vector_parse() {
        let v = StateVector::parse("1, 2.5\n# comment\n3e-1").unwrap();
        assert_eq!(v.0, vec![1.0, 2.5, 0.3]);
        assert!(StateVector::parse("1 two").is_err());
    }
}
