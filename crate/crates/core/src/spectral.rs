//! Laplacian eigendecomposition, spectral embedding and single-graph
//! normalized spectral clustering.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{degree_vector, laplacian, LaplacianKind, LayerGraph, MultiLayerGraph};
use crate::kmeans::{check_k, kmeans, KMeansConfig};

/// Full spectrum of one Laplacian, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
    pub kind: LaplacianKind,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Rows of the first `k` eigenvectors: one point per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.coords.ncols()
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }
}

/// Sorted eigendecomposition of a symmetric matrix with sign-canonical
/// eigenvectors.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    canonicalize_signs(&mut vectors);
    Ok((values, vectors))
}

/// Flips each column so its largest-magnitude entry is positive; entries
/// within a relative 1e-10 of the maximum count as ties and the lowest index
/// wins.
pub fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max == 0.0 {
            continue;
        }
        let pivot = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-10)).unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Decomposes the Laplacian of `g`.
///
/// The random-walk spectrum is obtained from the symmetric similarity
/// `T L_rw T^{-1}` with `T = diag(sqrt(d))`; eigenvectors are mapped back as
/// `T^{-1} v` and rescaled to unit Euclidean norm. For isolated vertices `T`
/// has a unit entry, so their basis vectors survive as eigenvectors with
/// eigenvalue 1.
pub fn decompose(g: &LayerGraph, kind: LaplacianKind) -> Result<SpectralDecomposition> {
    match kind {
        LaplacianKind::Combinatorial | LaplacianKind::Symmetric => {
            let (eigenvalues, eigenvectors) = symmetric_eigen(laplacian(g, kind))?;
            Ok(SpectralDecomposition { eigenvalues, eigenvectors, kind })
        }
        LaplacianKind::RandomWalk => {
            let n = g.n();
            let deg = degree_vector(g);
            let w = g.weights();
            let inv_sqrt = deg.inv_sqrt();
            let similar = DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]
            });
            let (eigenvalues, mut eigenvectors) = symmetric_eigen(similar)?;
            for i in 0..n {
                let scale = if deg.is_isolated(i) { 1.0 } else { inv_sqrt[i] };
                eigenvectors.row_mut(i).scale_mut(scale);
            }
            for mut col in eigenvectors.column_iter_mut() {
                let norm = col.norm();
                col /= norm;
            }
            canonicalize_signs(&mut eigenvectors);
            Ok(SpectralDecomposition { eigenvalues, eigenvectors, kind })
        }
    }
}

/// First `k` eigenvector columns.
pub fn embed(dec: &SpectralDecomposition, k: usize) -> Result<Embedding> {
    check_k(k, dec.n())?;
    Ok(Embedding { coords: dec.eigenvectors.columns(0, k).into_owned() })
}

/// Normalized spectral clustering of one graph: random-walk spectrum, first
/// `k` eigenvectors, k-means on the rows.
pub fn spectral_cluster(g: &LayerGraph, k: usize, cfg: &KMeansConfig) -> Result<Clustering> {
    check_k(k, g.n())?;
    let dec = decompose(g, LaplacianKind::RandomWalk)?;
    let emb = embed(&dec, k)?;
    kmeans(&emb.coords, k, cfg)
}

/// Second-smallest eigenvalue of the symmetric Laplacian (0 for one vertex).
pub fn fiedler_value(g: &LayerGraph) -> Result<f64> {
    let dec = decompose(g, LaplacianKind::Symmetric)?;
    Ok(dec.eigenvalues.get(1).copied().unwrap_or(0.0))
}

/// Index of the best-connected layer: largest Fiedler value of the symmetric
/// Laplacian, lowest index on ties.
pub fn most_connected_layer(mlg: &MultiLayerGraph) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, layer) in mlg.layers().iter().enumerate() {
        let v = fiedler_value(layer)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}
