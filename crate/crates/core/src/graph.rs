//! Weighted undirected graph layers, multi-layer graphs and their Laplacians.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance used when checking weight symmetry.
const SYMMETRY_TOL: f64 = 1e-12;

/// One layer: a weighted undirected graph on `n` vertices, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGraph {
    weights: DMatrix<f64>,
    name: Option<String>,
}

impl LayerGraph {
    /// Validates and wraps a weight matrix.
    ///
    /// The matrix must be square, finite, non-negative, symmetric and have a
    /// zero diagonal. Entries that differ from their transpose by rounding
    /// noise only are averaged so the stored matrix is exactly symmetric.
    pub fn new(mut weights: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = weights.shape();
        if rows != cols {
            return Err(Error::InvalidGraph(format!("weight matrix is {rows}x{cols}")));
        }
        if rows == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        for i in 0..rows {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            for j in (i + 1)..rows {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidGraph(format!("non-finite weight at ({i}, {j})")));
                }
                if a < 0.0 || b < 0.0 {
                    return Err(Error::InvalidGraph(format!("negative weight at ({i}, {j})")));
                }
                let scale = a.abs().max(b.abs()).max(1.0);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weights at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let w = 0.5 * (a + b);
                weights[(i, j)] = w;
                weights[(j, i)] = w;
            }
        }
        Ok(Self { weights, name: None })
    }

    /// Builds a layer from an undirected edge list; repeated pairs (in either
    /// orientation) have their weights summed.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut weights = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!("invalid weight {w} on edge ({i}, {j})")));
            }
            weights[(i, j)] += w;
            weights[(j, i)] += w;
        }
        Self::new(weights)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Number of undirected edges with non-zero weight.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.weights[(i, j)] != 0.0).count())
            .sum()
    }

    /// Same graph with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("scale factor must be positive, got {c}")));
        }
        Ok(Self { weights: &self.weights * c, name: self.name.clone() })
    }
}

/// `M >= 1` layers over one shared vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerGraph {
    layers: Vec<LayerGraph>,
}

impl MultiLayerGraph {
    pub fn new(layers: Vec<LayerGraph>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidGraph("multi-layer graph needs at least one layer".into()))?;
        let n = first.n();
        if let Some(bad) = layers.iter().find(|l| l.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
        }
        Ok(Self { layers })
    }

    pub fn n(&self) -> usize {
        self.layers[0].n()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerGraph] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &LayerGraph {
        &self.layers[i]
    }
}

/// Assembles validated layers into a multi-layer graph.
pub fn assemble_multilayer(layers: Vec<LayerGraph>) -> Result<MultiLayerGraph> {
    MultiLayerGraph::new(layers)
}

/// Weighted vertex degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.0[i] == 0.0
    }

    pub fn has_isolated(&self) -> bool {
        self.0.iter().any(|&d| d == 0.0)
    }

    /// `d^{-1/2}` with the pseudo-inverse convention (0 for isolated vertices).
    pub fn inv_sqrt(&self) -> Vec<f64> {
        self.0.iter().map(|&d| if d > 0.0 { 1.0 / libm::sqrt(d) } else { 0.0 }).collect()
    }

    /// `d^{-1}` with the pseudo-inverse convention.
    pub fn inv(&self) -> Vec<f64> {
        self.0.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect()
    }
}

impl core::ops::Index<usize> for DegreeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn degree_vector(g: &LayerGraph) -> DegreeVector {
    let w = g.weights();
    DegreeVector((0..g.n()).map(|i| w.row(i).iter().sum()).collect())
}

/// Which Laplacian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// `D - W`
    Combinatorial,
    /// `D^{-1/2} (D - W) D^{-1/2}`
    Symmetric,
    /// `I - D^{-1} W`
    RandomWalk,
}

impl LaplacianKind {
    pub const ALL: [LaplacianKind; 3] =
        [LaplacianKind::Combinatorial, LaplacianKind::Symmetric, LaplacianKind::RandomWalk];
}

/// Dense Laplacian of the requested kind.
///
/// Degree inverses follow the pseudo-inverse convention: an isolated vertex
/// gets a zero row/column in the symmetric Laplacian and a unit basis row in
/// the random-walk Laplacian.
pub fn laplacian(g: &LayerGraph, kind: LaplacianKind) -> DMatrix<f64> {
    let n = g.n();
    let w = g.weights();
    let deg = degree_vector(g);
    match kind {
        LaplacianKind::Combinatorial => {
            let mut l = -w.clone();
            for i in 0..n {
                l[(i, i)] = deg[i];
            }
            l
        }
        LaplacianKind::Symmetric => {
            let s = deg.inv_sqrt();
            DMatrix::from_fn(n, n, |i, j| {
                let dw = if i == j { deg[i] } else { -w[(i, j)] };
                s[i] * dw * s[j]
            })
        }
        LaplacianKind::RandomWalk => {
            let inv = deg.inv();
            DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - inv[i] * w[(i, j)]
            })
        }
    }
}

/// `D^{-1/2} W D^{-1/2}` with the pseudo-inverse convention.
pub fn normalized_adjacency(g: &LayerGraph) -> DMatrix<f64> {
    let s = degree_vector(g).inv_sqrt();
    let w = g.weights();
    DMatrix::from_fn(g.n(), g.n(), |i, j| s[i] * w[(i, j)] * s[j])
}

/// Whether every vertex is reachable from vertex 0 through positive-weight edges.
pub fn is_connected(g: &LayerGraph) -> bool {
    let n = g.n();
    let w = g.weights();
    let mut seen = alloc::vec![false; n];
    let mut stack = alloc::vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && w[(i, j)] > 0.0 {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}
