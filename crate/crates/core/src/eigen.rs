//! Eigenpairs of real nonsymmetric matrices with real spectra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::canonicalize_signs;

/// Imaginary parts above this (relative to the matrix scale) count as complex.
pub const COMPLEX_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum RealSpectrum {
    /// All eigenvalues real: ascending values and the first `count` unit-norm,
    /// sign-canonical eigenvectors.
    Real { eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64> },
    /// Largest imaginary part found.
    Complex { max_imag: f64 },
}

/// Eigenvalues from the real Schur form; the first `count` eigenvectors (in
/// ascending eigenvalue order) by shifted inverse iteration. Vectors sharing
/// a numerically repeated eigenvalue are orthogonalized against each other so
/// together they span the eigenspace.
pub fn real_eigen(m: &DMatrix<f64>, count: usize) -> Result<RealSpectrum> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let complex = m.clone().complex_eigenvalues();
    let max_imag = complex.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if max_imag > COMPLEX_TOL * scale {
        return Ok(RealSpectrum::Complex { max_imag });
    }
    let mut eigenvalues: Vec<f64> = complex.iter().map(|z| z.re).collect();
    eigenvalues.sort_by(f64::total_cmp);

    let count = count.min(n);
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(count);
    let cluster_tol = 1e-8 * scale;
    for j in 0..count {
        let lambda = eigenvalues[j];
        let shift = lambda - 1e-10 * scale;
        let shifted = m - DMatrix::identity(n, n) * shift;
        let lu = shifted.lu();
        let peers: Vec<usize> =
            (0..j).filter(|&i| (eigenvalues[i] - lambda).abs() <= cluster_tol).collect();
        let mut x = DVector::from_fn(n, |i, _| 1.0 + libm::sin(((i + 1) * (j + 2)) as f64));
        for _ in 0..4 {
            for &p in &peers {
                let d = vectors[p].dot(&x);
                x.axpy(-d, &vectors[p], 1.0);
            }
            x = lu.solve(&x).ok_or(Error::EigenFailure(n))?;
            let norm = x.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::EigenFailure(n));
            }
            x /= norm;
        }
        for &p in &peers {
            let d = vectors[p].dot(&x);
            x.axpy(-d, &vectors[p], 1.0);
        }
        x /= x.norm();
        let residual = (m * &x - &x * lambda).amax();
        if residual > 1e-6 * scale {
            return Err(Error::EigenFailure(n));
        }
        vectors.push(x);
    }
    let mut eigenvectors = DMatrix::from_columns(&vectors);
    if count == 0 {
        eigenvectors = DMatrix::zeros(n, 0);
    }
    canonicalize_signs(&mut eigenvectors);
    Ok(RealSpectrum::Real { eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, LaplacianKind, LayerGraph};

    #[test]
    fn recovers_random_walk_eigenpairs() {
        let g = LayerGraph::from_edges(
            5,
            &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 0.5), (3, 4, 1.5), (4, 0, 1.0), (1, 3, 0.3)],
        )
        .unwrap();
        let l = laplacian(&g, LaplacianKind::RandomWalk);
        let RealSpectrum::Real { eigenvalues, eigenvectors } = real_eigen(&l, 5).unwrap() else {
            panic!("random-walk spectrum is real");
        };
        assert!(eigenvalues[0].abs() < 1e-12);
        for j in 0..5 {
            let u = eigenvectors.column(j);
            assert!((&l * u - u * eigenvalues[j]).amax() < 1e-9);
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_eigenvalues_give_independent_vectors() {
        // Two components: eigenvalue 0 twice.
        let g = LayerGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 3.0)]).unwrap();
        let l = laplacian(&g, LaplacianKind::RandomWalk);
        let RealSpectrum::Real { eigenvectors, .. } = real_eigen(&l, 2).unwrap() else {
            panic!();
        };
        let gram = eigenvectors.transpose() * &eigenvectors;
        assert!(gram[(0, 1)].abs() < 1e-10);
        assert!((&l * &eigenvectors).amax() < 1e-9);
    }

    #[test]
    fn flags_complex_spectrum() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(real_eigen(&rot, 2).unwrap(), RealSpectrum::Complex { .. }));
    }
}
