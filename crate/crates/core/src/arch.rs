//! Coupling graphs of target architectures: builders, edge indexing, and
//! matching utilities.

use serde::Deserialize;
use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Line,
    Grid,
    SycamoreLike,
    Custom,
}

/// An undirected, connected, simple graph over physical qubits.
///
/// Edge index k is the position in `edges`; for lines this is fixed so that
/// e_k = (p_k, p_{k+1}), which the alternating-matchings reduction relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub qubit_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub kind: GraphKind,
}

/// Path graph on n qubits with e_k = (p_k, p_{k+1}).
pub fn build_line(n: usize) -> Result<CouplingGraph> {
    if n < 2 {
        return Err(Error::MalformedArch(format!("line needs >= 2 qubits, got {n}")));
    }
    Ok(CouplingGraph {
        qubit_count: n,
        edges: (0..n - 1).map(|k| (k, k + 1)).collect(),
        kind: GraphKind::Line,
    })
}

/// Rectangular grid, rows x cols, row-major vertex ids.
pub fn build_grid(rows: usize, cols: usize) -> Result<CouplingGraph> {
    if rows < 1 || cols < 1 || rows * cols < 2 {
        return Err(Error::MalformedArch(format!("invalid grid {rows}x{cols}")));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let kind = if rows == 1 || cols == 1 { GraphKind::Line } else { GraphKind::Grid };
    let g = CouplingGraph { qubit_count: rows * cols, edges, kind };
    if g.kind == GraphKind::Line {
        // 1xN grids are paths; reuse line indexing.
        return build_line(rows * cols);
    }
    Ok(g)
}

/// Diagonal-grid approximation of a Sycamore-style device.
///
/// Vertices are (r, c) row-major. Each vertex connects straight down, and
/// diagonally down-right on even rows / down-left on odd rows, giving max
/// degree 4.
pub fn build_sycamore_like(rows: usize, cols: usize) -> Result<CouplingGraph> {
    if rows < 2 || cols < 1 {
        return Err(Error::MalformedArch(format!(
            "sycamore-like needs rows >= 2, cols >= 1, got {rows}x{cols}"
        )));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows - 1 {
        for c in 0..cols {
            edges.push((id(r, c), id(r + 1, c)));
            if r % 2 == 0 && c + 1 < cols {
                edges.push((id(r, c), id(r + 1, c + 1)));
            }
            if r % 2 == 1 && c >= 1 {
                edges.push((id(r, c), id(r + 1, c - 1)));
            }
        }
    }
    let g = CouplingGraph {
        qubit_count: rows * cols,
        edges,
        kind: GraphKind::SycamoreLike,
    };
    debug_assert!(g.is_connected());
    Ok(g)
}

#[derive(Deserialize)]
struct ArchFile {
    qubits: usize,
    edges: Vec<(usize, usize)>,
}

/// Load a custom architecture from JSON `{qubits, edges}`.
///
/// Path graphs are canonicalized to line indexing so the alternating
/// matchings reduction applies to user-supplied paths.
pub fn parse_arch(text: &str) -> Result<CouplingGraph> {
    let file: ArchFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedArch(e.to_string()))?;
    let mut seen = HashSet::new();
    for &(a, b) in &file.edges {
        if a == b {
            return Err(Error::MalformedArch(format!("self-loop at p{a}")));
        }
        if a >= file.qubits || b >= file.qubits {
            return Err(Error::MalformedArch(format!("edge ({a},{b}) out of range")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::MalformedArch(format!("duplicate edge ({a},{b})")));
        }
    }
    let mut g = CouplingGraph {
        qubit_count: file.qubits,
        edges: file.edges,
        kind: GraphKind::Custom,
    };
    if !g.is_connected() {
        return Err(Error::MalformedArch("graph is not connected".into()));
    }
    if let Some(order) = g.path_edge_order() {
        g.edges = order;
        g.kind = GraphKind::Line;
    }
    Ok(g)
}

impl CouplingGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn is_connected(&self) -> bool {
        if self.qubit_count == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.qubit_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.qubit_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Two edges are incident if they share an endpoint. An edge is incident
    /// to itself.
    pub fn incident(&self, e: usize, f: usize) -> bool {
        let (a, b) = self.edges[e];
        let (c, d) = self.edges[f];
        a == c || a == d || b == c || b == d
    }

    /// Edge ids touching physical qubit p.
    pub fn edges_at(&self, p: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == p || b == p)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn degree(&self, p: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == p || b == p).count()
    }

    /// If the graph is a path, return its edges ordered along the path,
    /// starting from the lower-id endpoint. None otherwise.
    fn path_edge_order(&self) -> Option<Vec<(usize, usize)>> {
        let n = self.qubit_count;
        if self.edges.len() != n - 1 {
            return None;
        }
        let degs: Vec<usize> = (0..n).map(|p| self.degree(p)).collect();
        if degs.iter().any(|&d| d > 2) || degs.iter().filter(|&&d| d == 1).count() != 2 {
            return None;
        }
        // Connected + n-1 edges + degrees <= 2 with two endpoints => path.
        let start = (0..n).filter(|&p| degs[p] == 1).min()?;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut order = Vec::with_capacity(n - 1);
        let mut prev = usize::MAX;
        let mut cur = start;
        while order.len() < n - 1 {
            let next = *adj[cur].iter().find(|&&w| w != prev)?;
            order.push((cur, next));
            prev = cur;
            cur = next;
        }
        Some(order)
    }
}

/// True iff the given edge ids are pairwise non-adjacent.
pub fn is_matching(g: &CouplingGraph, edges: &[usize]) -> Result<bool> {
    let mut used = HashSet::new();
    let mut distinct = HashSet::new();
    for &e in edges {
        if e >= g.edge_count() {
            return Err(Error::UnknownEdge(e));
        }
        if !distinct.insert(e) {
            continue; // duplicate ids denote the same edge
        }
        let (a, b) = g.edges[e];
        if !used.insert(a) || !used.insert(b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Split a line's edges into the even-indexed and odd-indexed classes.
pub fn line_parity_classes(g: &CouplingGraph) -> Result<(Vec<usize>, Vec<usize>)> {
    if g.kind != GraphKind::Line {
        return Err(Error::NotALine(format!("{:?}", g.kind)));
    }
    let even = (0..g.edge_count()).step_by(2).collect();
    let odd = (1..g.edge_count()).step_by(2).collect();
    Ok((even, odd))
}
