//! Spectral regularization: eigenvectors of one layer smoothed over the
//! structure of another, with a greedy mutual-information ordering for more
//! than two layers.
//!
//! For an embedding column `u` and a layer with symmetric Laplacian `L`, the
//! regularized vector minimizes `||f - u||^2 + λ fᵀ L f`, whose solution is
//! `f = μ (L + μ I)^{-1} u` with `μ = 1 / λ`. The same vector is the fixed
//! point of the label-propagation iteration
//! `f ← α (I - L) f + (1 - α) u` with `α = λ / (1 + λ)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{laplacian, LaplacianKind, LayerGraph, MultiLayerGraph};
use crate::kmeans::{check_k, kmeans, KMeansConfig};
use crate::metrics::nmi;
use crate::rng;
use crate::spectral::{decompose, embed, most_connected_layer, spectral_cluster};

/// Smallest regularization weight used by the default schedule.
pub const MIN_DEFAULT_LAMBDA: f64 = 0.25;

/// `fᵀ L f`: how much `f` varies across the edges of the graph behind `L`.
pub fn smoothness(f: &DVector<f64>, l_sym: &DMatrix<f64>) -> f64 {
    f.dot(&(l_sym * f))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// Factorization of `L + μ I` shared by every vector regularized against the
/// same layer and weight.
pub struct Regularizer {
    chol: Cholesky<f64, Dyn>,
    mu: f64,
}

impl Regularizer {
    pub fn new(l_sym: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let mu = 1.0 / lambda;
        let n = l_sym.nrows();
        let shifted = l_sym + DMatrix::identity(n, n) * mu;
        let chol = Cholesky::new(shifted)
            .ok_or_else(|| Error::Config("L + mu I is not positive definite".into()))?;
        Ok(Self { chol, mu })
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(u) * self.mu
    }
}

/// Closed-form regularization of one vector.
pub fn regularize_vector(u: &DVector<f64>, l_sym: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    if u.len() != l_sym.nrows() {
        return Err(Error::DimensionMismatch { expected: l_sym.nrows(), found: u.len() });
    }
    Ok(Regularizer::new(l_sym, lambda)?.apply(u))
}

/// Label-propagation iteration from `f = u` until the largest entry change
/// falls below `tol`.
pub fn propagate(
    u: &DVector<f64>,
    l_sym: &DMatrix<f64>,
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    if u.len() != l_sym.nrows() {
        return Err(Error::DimensionMismatch { expected: l_sym.nrows(), found: u.len() });
    }
    let alpha = lambda / (1.0 + lambda);
    let mut f = u.clone();
    for _ in 0..max_iters {
        // (I - L) f = f - L f
        let next = (&f - l_sym * &f) * alpha + u * (1.0 - alpha);
        let delta = (&next - &f).amax();
        f = next;
        if delta < tol {
            return Ok(f);
        }
    }
    Err(Error::NoConvergence { iterations: max_iters, last: f.iter().copied().collect() })
}

/// Embedding whose first column comes from the source layer unchanged and
/// whose remaining columns were smoothed over the structure layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSpectrum {
    pub columns: DMatrix<f64>,
    pub source_layer: usize,
    pub structure_layer: usize,
}

/// Regularizes columns `1..` of `u` over `l_sym`.
fn smooth_columns(u: &DMatrix<f64>, l_sym: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let reg = Regularizer::new(l_sym, lambda)?;
    let mut out = u.clone();
    for j in 1..u.ncols() {
        let f = reg.apply(&u.column(j).into_owned());
        out.set_column(j, &f);
    }
    Ok(out)
}

/// Two-layer combination: the first `k` random-walk eigenvectors of `g1`,
/// columns after the first regularized over `g2`.
pub fn combine_pair(
    g1: &LayerGraph,
    g2: &LayerGraph,
    k: usize,
    lambda: f64,
) -> Result<SmoothedSpectrum> {
    if g1.n() != g2.n() {
        return Err(Error::DimensionMismatch { expected: g1.n(), found: g2.n() });
    }
    check_k(k, g1.n())?;
    let u = embed(&decompose(g1, LaplacianKind::RandomWalk)?, k)?.coords;
    let columns = smooth_columns(&u, &laplacian(g2, LaplacianKind::Symmetric), lambda)?;
    Ok(SmoothedSpectrum { columns, source_layer: 0, structure_layer: 1 })
}

/// Pairwise NMI between the single-layer spectral clusterings.
pub fn layer_nmi(mlg: &MultiLayerGraph, k: usize, km: &KMeansConfig) -> Result<DMatrix<f64>> {
    let m = mlg.num_layers();
    let labels: Vec<Clustering> =
        mlg.layers().iter().map(|g| spectral_cluster(g, k, km)).collect::<Result<_>>()?;
    let mut out = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = nmi(labels[i].labels(), labels[j].labels())?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SrConfig {
    /// One weight per combination step; the mutual-information rule is used
    /// for steps without an entry.
    pub lambda_schedule: Option<Vec<f64>>,
    /// Layers to visit first, in order; the remaining steps are greedy.
    pub order: Option<Vec<usize>>,
    pub km: KMeansConfig,
}

/// What the greedy combination did.
#[derive(Debug, Clone, PartialEq)]
pub struct SrReport {
    pub clustering: Clustering,
    /// Visited layers, starting with the source layer.
    pub order: Vec<usize>,
    /// Weight used when adding `order[t + 1]`.
    pub lambdas: Vec<f64>,
    pub embedding: DMatrix<f64>,
}

pub fn cluster_sr(mlg: &MultiLayerGraph, k: usize, cfg: &SrConfig) -> Result<Clustering> {
    cluster_sr_detailed(mlg, k, cfg).map(|r| r.clustering)
}

/// Greedy multi-layer spectral regularization.
///
/// The walk starts at `cfg.order[0]` (or the best-connected layer). While
/// layers remain, the current embedding is clustered and the unused layer
/// whose own spectral clustering shares the most information with it is
/// added, unless `cfg.order` names the next layer explicitly.
pub fn cluster_sr_detailed(mlg: &MultiLayerGraph, k: usize, cfg: &SrConfig) -> Result<SrReport> {
    let m = mlg.num_layers();
    check_k(k, mlg.n())?;
    cfg.km.validate()?;
    let explicit = cfg.order.as_deref().unwrap_or(&[]);
    let mut seen = vec![false; m];
    for &layer in explicit {
        if layer >= m {
            return Err(Error::Range { what: "layer order entry", value: layer, min: 0, max: m - 1 });
        }
        if core::mem::replace(&mut seen[layer], true) {
            return Err(Error::Config(format!("layer {layer} appears twice in the order")));
        }
    }
    let schedule = cfg.lambda_schedule.as_deref().unwrap_or(&[]);
    if schedule.len() > m - 1 {
        return Err(Error::Config(format!(
            "lambda schedule has {} entries but only {} combination steps exist",
            schedule.len(),
            m - 1
        )));
    }
    for &lambda in schedule {
        check_lambda(lambda)?;
    }

    let start = match explicit.first() {
        Some(&s) => s,
        None => most_connected_layer(mlg)?,
    };
    let mut u = embed(&decompose(mlg.layer(start), LaplacianKind::RandomWalk)?, k)?.coords;
    let mut order = vec![start];
    let mut lambdas = Vec::with_capacity(m - 1);
    let mut used = vec![false; m];
    used[start] = true;

    // Intermediate clusterings use their own seed so the final k-means keeps
    // the caller's configuration.
    let aux = KMeansConfig { seed: rng::stage_seed(cfg.km.seed, 1), ..cfg.km };
    let mut single: Vec<Option<Clustering>> = vec![None; m];

    for step in 0..m - 1 {
        let current = kmeans(&u, k, &aux)?;
        let score = |j: usize, single: &mut Vec<Option<Clustering>>| -> Result<f64> {
            if single[j].is_none() {
                single[j] = Some(spectral_cluster(mlg.layer(j), k, &aux)?);
            }
            nmi(current.labels(), single[j].as_ref().expect("filled above").labels())
        };
        let (next, info) = match explicit.get(step + 1) {
            Some(&j) => {
                let info =
                    if schedule.get(step).is_some() { f64::NAN } else { score(j, &mut single)? };
                (j, info)
            }
            None => {
                let mut best = (usize::MAX, f64::NEG_INFINITY);
                for j in (0..m).filter(|&j| !used[j]) {
                    let v = score(j, &mut single)?;
                    if v > best.1 {
                        best = (j, v);
                    }
                }
                best
            }
        };
        let lambda = match schedule.get(step) {
            Some(&l) => l,
            None => (2.0 * info).max(MIN_DEFAULT_LAMBDA),
        };
        log::debug!("regularization step {step}: layer {next}, lambda {lambda}");
        u = smooth_columns(&u, &laplacian(mlg.layer(next), LaplacianKind::Symmetric), lambda)?;
        used[next] = true;
        order.push(next);
        lambdas.push(lambda);
    }

    let clustering = kmeans(&u, k, &cfg.km)?;
    Ok(SrReport { clustering, order, lambdas, embedding: u })
}
