//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 20, max_iters: 300, seed: 0, tol: 1e-9 }
    }
}

impl KMeansConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::Config("k-means needs restarts >= 1 and max_iters >= 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("k-means tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of the best restart.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub clustering: Clustering,
    /// `k x dim` centroid matrix, rows indexed by the canonical labels.
    pub centroids: DMatrix<f64>,
    /// Within-cluster sum of squared distances.
    pub cost: f64,
}

/// Clusters the rows of `points` into `k` groups.
pub fn kmeans(points: &DMatrix<f64>, k: usize, cfg: &KMeansConfig) -> Result<Clustering> {
    kmeans_fit(points, k, cfg).map(|fit| fit.clustering)
}

pub fn kmeans_fit(points: &DMatrix<f64>, k: usize, cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = points.nrows();
    check_k(k, n)?;
    cfg.validate()?;
    let data = Rows::new(points);

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for restart in 0..cfg.restarts {
        let mut rng = rng::stream(cfg.seed, restart as u64);
        let centroids = plus_plus(&data, k, &mut rng);
        let (labels, centroids, cost) = lloyd(&data, centroids, k, cfg);
        // Strict comparison keeps the earliest restart on ties.
        if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
            best = Some((cost, labels, centroids));
        }
    }
    let (cost, labels, centroids) = best.expect("at least one restart");

    let clustering = Clustering::canonical(&labels, k)?;
    // Reorder centroid rows to follow the canonical labels.
    let dim = data.dim;
    let mut ordered = DMatrix::zeros(k, dim);
    let mut filled = vec![false; k];
    for (old, new) in labels.iter().zip(clustering.labels()) {
        if !filled[*new] {
            filled[*new] = true;
            for c in 0..dim {
                ordered[(*new, c)] = centroids[old * dim + c];
            }
        }
    }
    Ok(KMeansFit { clustering, centroids: ordered, cost })
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Range { what: "k", value: k, min: 1, max: n });
    }
    Ok(())
}

/// Row-major copy of the point matrix.
struct Rows {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Rows {
    fn new(m: &DMatrix<f64>) -> Self {
        let (n, dim) = m.shape();
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Self { n, dim, data }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++: first centre uniform, later centres with probability
/// proportional to the squared distance to the nearest chosen centre.
fn plus_plus(data: &Rows, k: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let dim = data.dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng::index(rng, data.n);
    centroids.extend_from_slice(data.row(first));
    let mut nearest: Vec<f64> = (0..data.n).map(|i| sq_dist(data.row(i), data.row(first))).collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng::uniform(rng) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            // Every point coincides with a centre; consume a draw to keep streams aligned.
            rng::index(rng, data.n)
        };
        centroids.extend_from_slice(data.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), data.row(pick)));
        }
    }
    centroids
}

fn nearest_centroid(point: &[f64], centroids: &[f64], k: usize, dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..k {
        let d = sq_dist(point, &centroids[c * dim..(c + 1) * dim]);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(
    data: &Rows,
    mut centroids: Vec<f64>,
    k: usize,
    cfg: &KMeansConfig,
) -> (Vec<usize>, Vec<f64>, f64) {
    let (n, dim) = (data.n, data.dim);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];

    for _ in 0..cfg.max_iters {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest_centroid(data.row(i), &centroids, k, dim);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = d;
        }
        changed |= repair_empty(data, &mut labels, &mut dists, &centroids, k);

        let mut next = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = labels[i];
            counts[c] += 1;
            for (acc, x) in next[c * dim..(c + 1) * dim].iter_mut().zip(data.row(i)) {
                *acc += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            for j in 0..dim {
                let v = next[c * dim + j] * inv;
                shift = shift.max((v - centroids[c * dim + j]).abs());
                next[c * dim + j] = v;
            }
        }
        centroids = next;
        if !changed || shift <= cfg.tol {
            break;
        }
    }

    let cost = (0..n)
        .map(|i| sq_dist(data.row(i), &centroids[labels[i] * dim..(labels[i] + 1) * dim]))
        .sum();
    (labels, centroids, cost)
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(
    data: &Rows,
    labels: &mut [usize],
    dists: &mut [f64],
    centroids: &[f64],
    k: usize,
) -> bool {
    let mut repaired = false;
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let donor = (0..data.n)
            .filter(|&i| counts[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
            dists[i] = sq_dist(data.row(i), &centroids[c * data.dim..(c + 1) * data.dim]);
            repaired = true;
        }
    }
    repaired
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DMatrix<f64> {
        // Two blobs of 10 points, radius <= 1, centres 10 apart.
        let mut rows = Vec::new();
        for b in 0..2 {
            for i in 0..10 {
                let t = i as f64 * 0.628;
                let r = 0.3 + 0.07 * i as f64;
                rows.push(10.0 * b as f64 + r * libm::cos(t));
                rows.push(r * libm::sin(t));
            }
        }
        DMatrix::from_row_slice(20, 2, &rows)
    }

    /// Exhaustive search over all 2-partitions: the optimal 2-means cost.
    fn brute_force_two_means(points: &DMatrix<f64>) -> f64 {
        let n = points.nrows();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << (n - 1)) {
            let mut cost = 0.0;
            for side in [false, true] {
                let members: Vec<usize> =
                    (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
                let m = members.len() as f64;
                for c in 0..points.ncols() {
                    let mean = members.iter().map(|&i| points[(i, c)]).sum::<f64>() / m;
                    cost += members.iter().map(|&i| (points[(i, c)] - mean).powi(2)).sum::<f64>();
                }
            }
            best = best.min(cost);
        }
        best
    }

    #[test]
    fn recovers_blobs_at_brute_force_optimum() {
        let pts = blobs();
        let fit = kmeans_fit(&pts, 2, &KMeansConfig::default()).unwrap();
        let optimum = brute_force_two_means(&pts);
        assert!((fit.cost - optimum).abs() < 1e-9, "{} vs {}", fit.cost, optimum);
        let labels = fit.clustering.labels();
        assert!(labels[..10].iter().all(|&l| l == labels[0]));
        assert!(labels[10..].iter().all(|&l| l == labels[10]));
        assert_ne!(labels[0], labels[10]);
    }

    #[test]
    fn k_equals_n_and_k_one() {
        let pts = blobs();
        let fit = kmeans_fit(&pts, 20, &KMeansConfig::default()).unwrap();
        assert!(fit.cost.abs() < 1e-20);
        let mut seen = fit.clustering.labels().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 20);

        let fit = kmeans_fit(&pts, 1, &KMeansConfig::default()).unwrap();
        assert!(fit.clustering.labels().iter().all(|&l| l == 0));
        for c in 0..2 {
            let mean = pts.column(c).mean();
            assert!((fit.centroids[(0, c)] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let pts = DMatrix::from_fn(40, 3, |i, j| libm::sin((i * 7 + j * 3) as f64));
        let cfg = KMeansConfig::with_seed(99);
        assert_eq!(kmeans(&pts, 4, &cfg).unwrap(), kmeans(&pts, 4, &cfg).unwrap());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = DMatrix::from_row_slice(5, 1, &[1.0, 1.0, 1.0, 1.0, 2.0]);
        let c = kmeans(&pts, 4, &KMeansConfig::default()).unwrap();
        let mut seen = c.labels().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = blobs();
        assert!(matches!(kmeans(&pts, 0, &KMeansConfig::default()), Err(Error::Range { .. })));
        assert!(matches!(kmeans(&pts, 21, &KMeansConfig::default()), Err(Error::Range { .. })));
    }
}
