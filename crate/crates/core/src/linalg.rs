//! Thin dense linear-algebra helpers over nalgebra with complex scalars.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative Hermiticity defect `‖H - H*‖_∞ / max(1, ‖H‖_∞)` (entrywise sup).
pub fn hermiticity_defect(h: &CMat) -> f64 {
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            scale = scale.max(h[(i, j)].norm());
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    defect / scale
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the unitary of column eigenvectors.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let se = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CVec) -> Result<CVec> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::ResolventSingular(0.0))
}

/// A factored solver for repeated right-hand sides.
pub struct LuSolver {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LuSolver {
    pub fn new(a: CMat) -> Self {
        Self { lu: a.lu() }
    }

    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        self.lu
            .solve(b)
            .ok_or_else(|| Error::ResolventSingular(0.0))
    }
}

/// Spectral norm via a few power iterations on `A*A` (deterministic start).
pub fn spectral_norm(a: &CMat, iters: usize) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let mut v = CVec::from_fn(a.ncols(), |i, _| {
        C64::new(1.0 + (i as f64 * 0.7).sin() * 0.3, (i as f64 * 1.3).cos() * 0.3)
    });
    v /= C64::new(v.norm(), 0.0);
    let mut sigma = 0.0;
    for _ in 0..iters {
        let w = a * &v;
        let z = a.adjoint() * &w;
        let nz = z.norm();
        if nz == 0.0 {
            return 0.0;
        }
        sigma = w.norm();
        v = z / C64::new(nz, 0.0);
    }
    sigma
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A v - λ v‖`-style residual `‖H Φ - Φ Λ‖_F / ‖H‖_F`.
pub fn eigen_residual(h: &CMat, values: &[f64], vectors: &CMat) -> f64 {
    let lam = CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&x| C64::new(x, 0.0)),
    ));
    fro_norm(&(h * vectors - vectors * lam)) / fro_norm(h).max(1e-300)
}

/// `‖Φ*Φ - I‖_F`.
pub fn orthonormality_defect(vectors: &CMat) -> f64 {
    let n = vectors.ncols();
    fro_norm(&(vectors.adjoint() * vectors - CMat::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_hermitian(n: usize) -> CMat {
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = C64::new(
                    0.3 / (1.0 + (i as f64 - j as f64).abs()),
                    0.1 * ((i + 2 * j) as f64).sin(),
                );
            }
            h[(i, i)] = C64::new(i as f64 * 0.5, 0.0);
        }
        let ha = h.adjoint();
        (h + ha) * C64::new(0.5, 0.0)
    }

    #[test]
    fn eigen_of_hermitian_is_accurate() {
        let h = test_hermitian(60);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "ascending");
        assert!(eigen_residual(&h, &vals, &vecs) < 1e-12);
        assert!(orthonormality_defect(&vecs) < 1e-12);
    }

    #[test]
    fn degenerate_spectrum_stays_orthonormal() {
        // diagonal with repeated entries plus a tiny Hermitian bump
        let n = 20;
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new((i / 4) as f64, 0.0);
        }
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(eigen_residual(&h, &vals, &vecs) < 1e-13);
        assert!(orthonormality_defect(&vecs) < 1e-12);
    }

    #[test]
    fn lu_solves() {
        let h = test_hermitian(30);
        let shifted = &h + CMat::identity(30, 30) * C64::new(0.0, 5.0);
        let b = CVec::from_fn(30, |i, _| C64::new(1.0 / (i as f64 + 1.0), 0.3));
        let x = lu_solve(&shifted, &b).unwrap();
        assert!((shifted * x - b).norm() < 1e-10);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut a = CMat::zeros(5, 5);
        for i in 0..5 {
            a[(i, i)] = C64::new(i as f64 - 2.0, 0.0);
        }
        let s = spectral_norm(&a, 60);
        assert!((s - 2.0).abs() < 1e-9);
    }
}
