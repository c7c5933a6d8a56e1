//! Joint eigenvector factorization of several random-walk Laplacians.
//!
//! Every layer Laplacian `L_i` is approximated as `P Λ_i Q` with a shared
//! basis `P`, a shared approximate inverse `Q` and the layer's own (fixed)
//! ascending eigenvalues `Λ_i`. The fitted objective is
//!
//! ```text
//! S(P, Q) = 1/2 Σ_i ||L_i - P Λ_i Q||_F^2
//!         + α/2 (||P||_F^2 + ||Q||_F^2)
//!         + β/2 ||P Q - I||_F^2
//! ```
//!
//! and is minimized by alternating L-BFGS solves over `P` (with `Q` fixed) and
//! `Q` (with `P` fixed). With one factor fixed `S` is a quadratic in the other,
//! so each inner solve works on a precomputed quadratic model that needs a
//! single `n x n` product per evaluation.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SVD};

use crate::clustering::Clustering;
use crate::eigen::{real_eigen, RealSpectrum};
use crate::error::{Error, Result};
use crate::graph::{laplacian, LaplacianKind, MultiLayerGraph};
use crate::kmeans::{check_k, kmeans, KMeansConfig};
use crate::lbfgs::{self, LbfgsConfig};
use crate::spectral::{decompose, most_connected_layer};

/// Largest condition number accepted for the initial basis.
pub const MAX_INIT_CONDITION: f64 = 1e12;

/// Tolerance on the objective increase tolerated between outer iterations
/// before a step is rejected as rounding noise.
const DESCENT_SLACK: f64 = 0.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GedProblem {
    laplacians: Vec<DMatrix<f64>>,
    eigenvalues: Vec<Vec<f64>>,
    /// Per-layer eigenvector matrices, when the problem was built from graphs.
    bases: Option<Vec<DMatrix<f64>>>,
    pub alpha: f64,
    pub beta: f64,
}

impl GedProblem {
    /// Problem over arbitrary square matrices with their ascending eigenvalues.
    pub fn new(
        laplacians: Vec<DMatrix<f64>>,
        eigenvalues: Vec<Vec<f64>>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let first = laplacians
            .first()
            .ok_or_else(|| Error::Config("joint factorization needs at least one layer".into()))?;
        let n = first.nrows();
        if laplacians.len() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: laplacians.len(),
                found: eigenvalues.len(),
            });
        }
        for (l, ev) in laplacians.iter().zip(&eigenvalues) {
            if l.shape() != (n, n) {
                return Err(Error::DimensionMismatch { expected: n, found: l.nrows().max(l.ncols()) });
            }
            if ev.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: ev.len() });
            }
            if ev.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Config("eigenvalues must be sorted ascending".into()));
            }
        }
        if !(alpha >= 0.0) || !(beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be non-negative (alpha = {alpha}, beta = {beta})"
            )));
        }
        Ok(Self { laplacians, eigenvalues, bases: None, alpha, beta })
    }

    /// Random-walk Laplacians and spectra of every layer.
    pub fn from_graph(mlg: &MultiLayerGraph, alpha: f64, beta: f64) -> Result<Self> {
        let mut laplacians = Vec::with_capacity(mlg.num_layers());
        let mut eigenvalues = Vec::with_capacity(mlg.num_layers());
        let mut bases = Vec::with_capacity(mlg.num_layers());
        for layer in mlg.layers() {
            let dec = decompose(layer, LaplacianKind::RandomWalk)?;
            laplacians.push(laplacian(layer, LaplacianKind::RandomWalk));
            eigenvalues.push(dec.eigenvalues);
            bases.push(dec.eigenvectors);
        }
        let mut prob = Self::new(laplacians, eigenvalues, alpha, beta)?;
        prob.bases = Some(bases);
        Ok(prob)
    }

    pub fn n(&self) -> usize {
        self.laplacians[0].nrows()
    }

    pub fn num_layers(&self) -> usize {
        self.laplacians.len()
    }

    pub fn laplacians(&self) -> &[DMatrix<f64>] {
        &self.laplacians
    }

    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    /// Eigenvectors of layer `layer`, ordered like its eigenvalues.
    fn basis(&self, layer: usize) -> Result<DMatrix<f64>> {
        if let Some(bases) = &self.bases {
            return Ok(bases[layer].clone());
        }
        match real_eigen(&self.laplacians[layer], self.n())? {
            RealSpectrum::Real { eigenvectors, .. } => Ok(eigenvectors),
            RealSpectrum::Complex { max_imag } => Err(Error::Config(format!(
                "layer {layer} has a complex spectrum (imaginary part {max_imag:e})"
            ))),
        }
    }
}

/// Which layer's eigenvectors seed `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitLayer {
    Index(usize),
    /// Layer with the largest symmetric-Laplacian Fiedler value.
    MostConnected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GedSolverConfig {
    pub init_layer: InitLayer,
    pub max_outer: usize,
    /// Stop once the relative objective decrease of an outer iteration drops below this.
    pub outer_tol: f64,
    pub lbfgs: LbfgsConfig,
}

impl Default for GedSolverConfig {
    fn default() -> Self {
        Self {
            init_layer: InitLayer::Index(0),
            max_outer: 50,
            outer_tol: 1e-6,
            lbfgs: LbfgsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GedSolution {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Objective at initialization followed by one value per outer iteration.
    pub objective_trace: Vec<f64>,
    pub init_layer: usize,
}

fn scaled_columns(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

fn scaled_rows(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

fn pq_minus_identity(p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut r = p * q;
    for i in 0..r.nrows() {
        r[(i, i)] -= 1.0;
    }
    r
}

/// Residuals `L_i - P Λ_i Q`.
fn residuals(p: &DMatrix<f64>, q: &DMatrix<f64>, prob: &GedProblem) -> Vec<DMatrix<f64>> {
    prob.laplacians
        .iter()
        .zip(&prob.eigenvalues)
        .map(|(l, ev)| l - scaled_columns(p, ev) * q)
        .collect()
}

pub fn ged_objective(p: &DMatrix<f64>, q: &DMatrix<f64>, prob: &GedProblem) -> f64 {
    let fit: f64 = residuals(p, q, prob).iter().map(|r| r.norm_squared()).sum();
    0.5 * fit
        + 0.5 * prob.alpha * (p.norm_squared() + q.norm_squared())
        + 0.5 * prob.beta * pq_minus_identity(p, q).norm_squared()
}

/// `∂S/∂P = -Σ_i R_i Qᵀ Λ_i + αP + β(PQ - I)Qᵀ`.
pub fn ged_grad_p(p: &DMatrix<f64>, q: &DMatrix<f64>, prob: &GedProblem) -> DMatrix<f64> {
    let qt = q.transpose();
    let mut g = p * prob.alpha + pq_minus_identity(p, q) * &qt * prob.beta;
    for (r, ev) in residuals(p, q, prob).iter().zip(&prob.eigenvalues) {
        g -= scaled_columns(&(r * &qt), ev);
    }
    g
}

/// `∂S/∂Q = -Σ_i Λ_i Pᵀ R_i + αQ + βPᵀ(PQ - I)`.
pub fn ged_grad_q(p: &DMatrix<f64>, q: &DMatrix<f64>, prob: &GedProblem) -> DMatrix<f64> {
    let pt = p.transpose();
    let mut g = q * prob.alpha + &pt * pq_minus_identity(p, q) * prob.beta;
    for (r, ev) in residuals(p, q, prob).iter().zip(&prob.eigenvalues) {
        g -= scaled_rows(&(&pt * r), ev);
    }
    g
}

/// The objective restricted to one factor: `1/2 <X H, X> - <B, X> + c` for
/// the P-step (`X = P`, multiplication on the right) or
/// `1/2 <H X, X> - <B, X> + c` for the Q-step.
struct Quadratic {
    hessian: DMatrix<f64>,
    linear: DMatrix<f64>,
    constant: f64,
    right: bool,
}

impl Quadratic {
    /// Model in `P` with `Q` fixed.
    fn in_p(q: &DMatrix<f64>, prob: &GedProblem) -> Self {
        let n = prob.n();
        let gram = q * q.transpose();
        let qt = q.transpose();
        let mut hessian = &gram * prob.beta;
        let mut linear = &qt * prob.beta;
        for (l, ev) in prob.laplacians.iter().zip(&prob.eigenvalues) {
            hessian += DMatrix::from_fn(n, n, |a, b| ev[a] * gram[(a, b)] * ev[b]);
            linear += scaled_columns(&(l * &qt), ev);
        }
        for i in 0..n {
            hessian[(i, i)] += prob.alpha;
        }
        let constant = 0.5 * prob.laplacians.iter().map(|l| l.norm_squared()).sum::<f64>()
            + 0.5 * prob.alpha * q.norm_squared()
            + 0.5 * prob.beta * n as f64;
        Self { hessian, linear, constant, right: true }
    }

    /// Model in `Q` with `P` fixed.
    fn in_q(p: &DMatrix<f64>, prob: &GedProblem) -> Self {
        let n = prob.n();
        let gram = p.transpose() * p;
        let pt = p.transpose();
        let mut hessian = &gram * prob.beta;
        let mut linear = &pt * prob.beta;
        for (l, ev) in prob.laplacians.iter().zip(&prob.eigenvalues) {
            hessian += DMatrix::from_fn(n, n, |a, b| ev[a] * gram[(a, b)] * ev[b]);
            linear += scaled_rows(&(&pt * l), ev);
        }
        for i in 0..n {
            hessian[(i, i)] += prob.alpha;
        }
        let constant = 0.5 * prob.laplacians.iter().map(|l| l.norm_squared()).sum::<f64>()
            + 0.5 * prob.alpha * p.norm_squared()
            + 0.5 * prob.beta * n as f64;
        Self { hessian, linear, constant, right: false }
    }

    /// Value and gradient at `x` (column-major `n x n`).
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.hessian.nrows();
        let xm = nalgebra::DMatrixView::from_slice(x, n, n);
        let hx = if self.right { xm * &self.hessian } else { &self.hessian * xm };
        let mut value = self.constant;
        for i in 0..x.len() {
            let h = hx.as_slice()[i];
            let b = self.linear.as_slice()[i];
            value += x[i] * (0.5 * h - b);
            grad[i] = h - b;
        }
        value
    }

    fn minimize(&self, start: &DMatrix<f64>, cfg: &LbfgsConfig) -> Result<DMatrix<f64>> {
        let mut x = start.as_slice().to_vec();
        lbfgs::minimize(&mut x, cfg, |x, g| self.eval(x, g))?;
        Ok(DMatrix::from_vec(start.nrows(), start.ncols(), x))
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Runs the alternating minimization from the chosen layer's eigenvectors.
pub fn solve_ged(prob: &GedProblem, cfg: &GedSolverConfig) -> Result<GedSolution> {
    if cfg.max_outer == 0 || !(cfg.outer_tol >= 0.0) {
        return Err(Error::Config("need max_outer >= 1 and a non-negative outer_tol".into()));
    }
    cfg.lbfgs.validate()?;
    let init_layer = match cfg.init_layer {
        InitLayer::Index(i) if i < prob.num_layers() => i,
        InitLayer::Index(i) => {
            return Err(Error::Range {
                what: "init_layer",
                value: i,
                min: 0,
                max: prob.num_layers() - 1,
            })
        }
        InitLayer::MostConnected => {
            return Err(Error::Config(
                "the most-connected heuristic needs graphs; resolve it with cluster_ged".into(),
            ))
        }
    };
    let p0 = prob.basis(init_layer)?;
    let cond = condition_number(&p0);
    if !(cond <= MAX_INIT_CONDITION) {
        return Err(Error::SingularInit(cond));
    }
    let q0 = p0.clone().try_inverse().ok_or(Error::SingularInit(f64::INFINITY))?;
    solve_from(prob, p0, q0, init_layer, cfg)
}

fn solve_from(
    prob: &GedProblem,
    mut p: DMatrix<f64>,
    mut q: DMatrix<f64>,
    init_layer: usize,
    cfg: &GedSolverConfig,
) -> Result<GedSolution> {
    let mut current = ged_objective(&p, &q, prob);
    let mut trace = Vec::with_capacity(cfg.max_outer + 1);
    trace.push(current);
    for _ in 0..cfg.max_outer {
        let previous = current;

        let p_next = Quadratic::in_p(&q, prob).minimize(&p, &cfg.lbfgs)?;
        let value = ged_objective(&p_next, &q, prob);
        if value <= current + DESCENT_SLACK {
            p = p_next;
            current = value;
        }
        let q_next = Quadratic::in_q(&p, prob).minimize(&q, &cfg.lbfgs)?;
        let value = ged_objective(&p, &q_next, prob);
        if value <= current + DESCENT_SLACK {
            q = q_next;
            current = value;
        }

        trace.push(current);
        let decrease = previous - current;
        if decrease <= cfg.outer_tol * previous.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    log::debug!("joint factorization: {} outer iterations, objective {current:e}", trace.len() - 1);
    Ok(GedSolution { p, q, objective_trace: trace, init_layer })
}

/// Regularization weights of the joint factorization objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GedWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GedWeights {
    fn default() -> Self {
        Self { alpha: 10.0, beta: 100.0 }
    }
}

/// Clusters the rows of the first `k` joint eigenvectors.
pub fn cluster_ged(
    mlg: &MultiLayerGraph,
    k: usize,
    weights: GedWeights,
    cfg: &GedSolverConfig,
    km: &KMeansConfig,
) -> Result<Clustering> {
    cluster_ged_detailed(mlg, k, weights, cfg, km).map(|(c, _)| c)
}

pub fn cluster_ged_detailed(
    mlg: &MultiLayerGraph,
    k: usize,
    weights: GedWeights,
    cfg: &GedSolverConfig,
    km: &KMeansConfig,
) -> Result<(Clustering, GedSolution)> {
    check_k(k, mlg.n())?;
    let prob = GedProblem::from_graph(mlg, weights.alpha, weights.beta)?;
    let mut cfg = *cfg;
    if cfg.init_layer == InitLayer::MostConnected {
        cfg.init_layer = InitLayer::Index(most_connected_layer(mlg)?);
    }
    let sol = solve_ged(&prob, &cfg)?;
    let coords = sol.p.columns(0, k).into_owned();
    Ok((kmeans(&coords, k, km)?, sol))
}
