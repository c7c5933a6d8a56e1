//! Simple layer combiners used as reference points: summed adjacency
//! matrices, kernel k-means on summed spectral projectors, and the averaged
//! random-walk Laplacian.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::clustering::Clustering;
use crate::eigen::{real_eigen, RealSpectrum};
use crate::error::{Error, Result};
use crate::graph::{laplacian, normalized_adjacency, LaplacianKind, LayerGraph, MultiLayerGraph};
use crate::kmeans::{check_k, kmeans, KMeansConfig};
use crate::rng;
use crate::spectral::{decompose, spectral_cluster, symmetric_eigen};

/// Layers whose random-walk Laplacians agree entrywise within this are
/// treated as identical by [`sc_al`].
const IDENTICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    ScSum,
    ScSumNormalized,
    KernelKMeans,
    ScAl,
}

/// Spectral clustering of the summed adjacency matrices, or of the summed
/// normalized adjacencies `D^{-1/2} W D^{-1/2}` when `normalized` is set.
pub fn sc_sum(
    mlg: &MultiLayerGraph,
    k: usize,
    normalized: bool,
    km: &KMeansConfig,
) -> Result<Clustering> {
    let n = mlg.n();
    let mut total = DMatrix::zeros(n, n);
    for layer in mlg.layers() {
        if normalized {
            total += normalized_adjacency(layer);
        } else {
            total += layer.weights();
        }
    }
    spectral_cluster(&LayerGraph::new(total)?, k, km)
}

/// `Σ_i V_i V_iᵀ` over the first `d` symmetric-Laplacian eigenvectors of each layer.
pub fn spectral_kernel(mlg: &MultiLayerGraph, d: usize) -> Result<DMatrix<f64>> {
    let n = mlg.n();
    check_k(d, n).map_err(|_| Error::Range { what: "d", value: d, min: 1, max: n })?;
    let mut kernel = DMatrix::zeros(n, n);
    for layer in mlg.layers() {
        let dec = decompose(layer, LaplacianKind::Symmetric)?;
        let v = dec.eigenvectors.columns(0, d);
        kernel += &v * v.transpose();
    }
    Ok(kernel)
}

/// Best restart of kernel k-means.
#[derive(Debug, Clone)]
pub struct KernelKMeansFit {
    pub clustering: Clustering,
    /// Sum of squared feature-space distances to the cluster means.
    pub objective: f64,
    /// Objective after seeding and after every iteration of the best restart.
    pub trace: Vec<f64>,
}

/// Kernel k-means on the summed spectral kernels; `d` defaults to `k`.
pub fn kernel_kmeans_sum(
    mlg: &MultiLayerGraph,
    k: usize,
    d: Option<usize>,
    km: &KMeansConfig,
) -> Result<Clustering> {
    let kernel = spectral_kernel(mlg, d.unwrap_or(k))?;
    kernel_kmeans(&kernel, k, km).map(|fit| fit.clustering)
}

/// Kernel k-means with k-means++ seeding in feature space, batch
/// reassignment and seeded restarts. Distances come from kernel entries only:
/// `||φ_i - m_c||² = K_ii - 2/|c| Σ_{j∈c} K_ij + 1/|c|² Σ_{j,l∈c} K_jl`.
pub fn kernel_kmeans(kernel: &DMatrix<f64>, k: usize, km: &KMeansConfig) -> Result<KernelKMeansFit> {
    let n = kernel.nrows();
    if kernel.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: kernel.ncols() });
    }
    check_k(k, n)?;
    km.validate()?;

    let mut best: Option<(Vec<usize>, f64, Vec<f64>)> = None;
    for restart in 0..km.restarts {
        let mut r = rng::stream(km.seed, restart as u64);
        let labels = seed_assignment(kernel, k, &mut r);
        let (labels, trace) = refine(kernel, labels, k, km.max_iters);
        let objective = *trace.last().expect("trace starts with the seeding");
        if best.as_ref().map_or(true, |(_, b, _)| objective < *b) {
            best = Some((labels, objective, trace));
        }
    }
    let (labels, objective, trace) = best.expect("at least one restart");
    Ok(KernelKMeansFit { clustering: Clustering::canonical(&labels, k)?, objective, trace })
}

fn feature_dist(kernel: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (kernel[(i, i)] + kernel[(j, j)] - 2.0 * kernel[(i, j)]).max(0.0)
}

/// k-means++ over feature-space distances, then nearest-seed assignment.
fn seed_assignment(kernel: &DMatrix<f64>, k: usize, r: &mut rng::Rng) -> Vec<usize> {
    let n = kernel.nrows();
    let mut centres = vec![rng::index(r, n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| feature_dist(kernel, i, centres[0])).collect();
    while centres.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng::uniform(r) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            rng::index(r, n)
        };
        centres.push(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(feature_dist(kernel, i, pick));
        }
    }
    // Duplicate picks (all points coincide) still give each centre its own label.
    let mut labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (c, &s) in centres.iter().enumerate() {
                let d = feature_dist(kernel, i, s);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect();
    for (c, &s) in centres.iter().enumerate() {
        if !centres[..c].contains(&s) {
            labels[s] = c;
        }
    }
    labels
}

/// Feature-space distance of every point to every cluster mean (`n x k`).
fn distances(kernel: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let n = kernel.nrows();
    let mut size = vec![0usize; k];
    for &l in labels {
        size[l] += 1;
    }
    // cross[(i, c)] = Σ_{j∈c} K_ij
    let mut cross = DMatrix::<f64>::zeros(n, k);
    for j in 0..n {
        let c = labels[j];
        for i in 0..n {
            cross[(i, c)] += kernel[(i, j)];
        }
    }
    let mut within = vec![0.0; k];
    for j in 0..n {
        within[labels[j]] += cross[(j, labels[j])];
    }
    DMatrix::from_fn(n, k, |i, c| {
        if size[c] == 0 {
            return f64::INFINITY;
        }
        let s = size[c] as f64;
        (kernel[(i, i)] - 2.0 * cross[(i, c)] / s + within[c] / (s * s)).max(0.0)
    })
}

fn objective(kernel: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let dist = distances(kernel, labels, k);
    labels.iter().enumerate().map(|(i, &c)| dist[(i, c)]).sum()
}

/// Batch kernel k-means iterations. Each reassignment moves points to the
/// nearest current mean, so the objective never increases.
fn refine(
    kernel: &DMatrix<f64>,
    mut labels: Vec<usize>,
    k: usize,
    max_iters: usize,
) -> (Vec<usize>, Vec<f64>) {
    let n = kernel.nrows();
    let mut trace = vec![objective(kernel, &labels, k)];
    for _ in 0..max_iters {
        let dist = distances(kernel, &labels, k);
        let mut next: Vec<usize> = (0..n)
            .map(|i| {
                // Keep the current cluster on ties so the loop terminates.
                let mut best = (labels[i], dist[(i, labels[i])]);
                for c in 0..k {
                    if dist[(i, c)] < best.1 {
                        best = (c, dist[(i, c)]);
                    }
                }
                best.0
            })
            .collect();
        repair_empty(kernel, &mut next, k);
        if next == labels {
            break;
        }
        let value = objective(kernel, &next, k);
        let last = *trace.last().expect("non-empty");
        debug_assert!(value <= last + 1e-9 * last.abs().max(1.0), "kernel k-means objective rose");
        labels = next;
        trace.push(value);
    }
    (labels, trace)
}

/// Gives each empty cluster the point farthest from its own cluster mean,
/// taken from clusters that keep at least one member.
fn repair_empty(kernel: &DMatrix<f64>, labels: &mut [usize], k: usize) {
    loop {
        let mut size = vec![0usize; k];
        for &l in labels.iter() {
            size[l] += 1;
        }
        let Some(empty) = (0..k).find(|&c| size[c] == 0) else {
            return;
        };
        let dist = distances(kernel, labels, k);
        let mut donor = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..labels.len() {
            let d = dist[(i, labels[i])];
            if size[labels[i]] > 1 && d > donor.1 {
                donor = (i, d);
            }
        }
        labels[donor.0] = empty;
    }
}

/// Spectral clustering on the average of the layers' random-walk Laplacians.
///
/// The average is not symmetric in general, so its eigenvectors come from a
/// general real eigensolver. If the spectrum turns out complex, the
/// symmetric part `(A + Aᵀ) / 2` is decomposed instead and a warning logged.
pub fn sc_al(mlg: &MultiLayerGraph, k: usize, km: &KMeansConfig) -> Result<Clustering> {
    let n = mlg.n();
    check_k(k, n)?;
    let laplacians: Vec<DMatrix<f64>> =
        mlg.layers().iter().map(|g| laplacian(g, LaplacianKind::RandomWalk)).collect();
    let first = &laplacians[0];
    if laplacians[1..].iter().all(|l| (l - first).amax() <= IDENTICAL_TOL) {
        // The average is the common Laplacian; its spectrum is exactly that
        // of the first layer.
        return spectral_cluster(mlg.layer(0), k, km);
    }
    let mut avg = DMatrix::zeros(n, n);
    for l in &laplacians {
        avg += l;
    }
    avg /= laplacians.len() as f64;

    let coords = match real_eigen(&avg, k)? {
        RealSpectrum::Real { eigenvectors, .. } => eigenvectors,
        RealSpectrum::Complex { max_imag } => {
            log::warn!(
                "averaged Laplacian has complex eigenvalues (imaginary part up to {max_imag:e}); \
                 using its symmetric part"
            );
            let sym = (&avg + avg.transpose()) * 0.5;
            symmetric_eigen(sym)?.1.columns(0, k).into_owned()
        }
    };
    kmeans(&coords, k, km)
}

/// Runs the chosen baseline; `d` only affects kernel k-means.
pub fn run_baseline(
    kind: BaselineKind,
    mlg: &MultiLayerGraph,
    k: usize,
    d: Option<usize>,
    km: &KMeansConfig,
) -> Result<Clustering> {
    match kind {
        BaselineKind::ScSum => sc_sum(mlg, k, false, km),
        BaselineKind::ScSumNormalized => sc_sum(mlg, k, true, km),
        BaselineKind::KernelKMeans => kernel_kmeans_sum(mlg, k, d, km),
        BaselineKind::ScAl => sc_al(mlg, k, km),
    }
}
