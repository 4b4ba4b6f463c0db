//! Assembly, diagonalization and functional calculus of the Bloch-shifted
//! operator family `H_{θ,V} = -Δ + 2iθ·∇ + |θ|² + V` on truncated Fourier
//! bases.
//!
//! On the mode basis the matrix is
//! `H[n,m] = |n-θ|² δ_{n,m} + V̂(n-m)`, which is exactly diagonal for `V = 0`
//! and Hermitian whenever `V` is real-valued.

use crate::field::TorusField;
use crate::linalg::{self, CMat, CVec};
use crate::modes::ModeSet;
use crate::{Error, Result, C64};
use std::sync::Arc;

/// Quasi-momentum `θ ∈ [0,1]^d`. The second component is `0` for `d = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParameter {
    dim: usize,
    components: [f64; 2],
}

impl BlochParameter {
    pub fn new(dim: usize, components: [f64; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::DimensionMismatch(format!("d = {dim}")));
        }
        let active = if dim == 1 { &components[..1] } else { &components[..] };
        if active.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidParameter(format!(
                "Bloch parameter out of [0,1]^d: {components:?}"
            )));
        }
        if dim == 1 && components[1] != 0.0 {
            return Err(Error::InvalidParameter(
                "1-d Bloch parameter with nonzero second component".into(),
            ));
        }
        Ok(Self { dim, components })
    }

    pub fn one_d(t: f64) -> Result<Self> {
        Self::new(1, [t, 0.0])
    }

    pub fn two_d(t1: f64, t2: f64) -> Result<Self> {
        Self::new(2, [t1, t2])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64; 2] {
        &self.components
    }
}

/// Dense Hermitian matrix of `H_{θ,V}` on a [`ModeSet`].
#[derive(Debug, Clone)]
pub struct BlochOperator {
    modes: Arc<ModeSet>,
    theta: BlochParameter,
    matrix: CMat,
}

/// Spectral decomposition `(λ_k, ψ_k)` with ascending eigenvalues and
/// eigenvector columns orthonormal in coefficient ℓ².
#[derive(Debug, Clone)]
pub struct EigenSystem {
    modes: Arc<ModeSet>,
    theta: BlochParameter,
    values: Vec<f64>,
    vectors: CMat,
}

/// Tolerance below which sampled imaginary parts certify a real potential.
pub const REAL_TOL: f64 = 1e-10;

/// Assemble the Galerkin matrix of `H_{θ,V}` on `modes`.
///
/// `V` may live on any mode set of the same dimension; its coefficients
/// outside the difference band of `modes` never enter the matrix. Fails if
/// `V` is not real-valued to [`REAL_TOL`] or the dimensions disagree.
pub fn assemble_operator(
    modes: &Arc<ModeSet>,
    theta: BlochParameter,
    v: &TorusField,
) -> Result<BlochOperator> {
    if theta.dim() != modes.dim() {
        return Err(Error::DimensionMismatch(format!(
            "θ has d = {}, modes have d = {}",
            theta.dim(),
            modes.dim()
        )));
    }
    if v.modes().dim() != modes.dim() {
        return Err(Error::ModeSetMismatch(format!(
            "potential has d = {}, modes have d = {}",
            v.modes().dim(),
            modes.dim()
        )));
    }
    let im_max = v.max_sampled_imag();
    if im_max >= REAL_TOL {
        return Err(Error::NonRealPotential(im_max));
    }
    let n = modes.len();
    let mut h = CMat::zeros(n, n);
    for (i, ni) in modes.modes().iter().enumerate() {
        h[(i, i)] = C64::new(modes.shifted_norm_sq(i, theta.components()), 0.0);
        for (j, nj) in modes.modes().iter().enumerate() {
            let diff = [ni[0] - nj[0], ni[1] - nj[1]];
            let vc = v.coeff(diff);
            if vc != C64::ZERO {
                h[(i, j)] += vc;
            }
        }
    }
    Ok(BlochOperator { modes: modes.clone(), theta, matrix: h })
}

impl BlochOperator {
    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn theta(&self) -> BlochParameter {
        self.theta
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.modes.dim()
    }

    /// Apply to a field.
    pub fn apply(&self, u: &TorusField) -> Result<TorusField> {
        self.check_field(u)?;
        let v = &self.matrix * CVec::from_column_slice(u.coeffs());
        TorusField::from_coeffs(self.modes.clone(), v.as_slice().to_vec())
    }

    fn check_field(&self, u: &TorusField) -> Result<()> {
        if u.modes().as_ref() != self.modes.as_ref() {
            return Err(Error::ModeSetMismatch(
                "field does not live on the operator's mode set".into(),
            ));
        }
        Ok(())
    }

    /// Solve `(λ I + i H) u = f`.
    ///
    /// For `Re λ > 0` the system is uniformly invertible (`H` Hermitian).
    /// Otherwise the shift is rejected when it sits within `1e-12` of the
    /// spectrum of `-iH`.
    pub fn resolvent_apply(&self, lambda: C64, f: &TorusField) -> Result<TorusField> {
        self.check_field(f)?;
        if lambda.re <= 0.0 {
            let (values, _) = linalg::hermitian_eigen(&self.matrix);
            let dist = values
                .iter()
                .map(|&l| (lambda + C64::new(0.0, l)).norm())
                .fold(f64::INFINITY, f64::min);
            if dist <= 1e-12 {
                return Err(Error::ResolventSingular(dist));
            }
        }
        let n = self.modes.len();
        let a = &self.matrix * C64::new(0.0, 1.0) + CMat::identity(n, n) * lambda;
        let b = CVec::from_column_slice(f.coeffs());
        let u = linalg::lu_solve(&a, &b)?;
        let residual = (&a * &u - &b).norm();
        let fnorm = b.norm();
        if residual > 1e-9 * fnorm.max(1e-300) {
            return Err(Error::ResolventSingular(residual / fnorm.max(1e-300)));
        }
        TorusField::from_coeffs(self.modes.clone(), u.as_slice().to_vec())
    }
}

/// Diagonalize a [`BlochOperator`]. Fails if the matrix is not Hermitian to
/// `1e-12` relative.
pub fn eigendecompose(op: &BlochOperator) -> Result<EigenSystem> {
    let defect = linalg::hermiticity_defect(&op.matrix);
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = linalg::hermitian_eigen(&op.matrix);
    Ok(EigenSystem {
        modes: op.modes.clone(),
        theta: op.theta,
        values,
        vectors,
    })
}

impl EigenSystem {
    /// Build directly from a spectral pair (used by the cache layer and the
    /// degenerate-rotation tests).
    pub fn from_parts(
        modes: Arc<ModeSet>,
        theta: BlochParameter,
        values: Vec<f64>,
        vectors: CMat,
    ) -> Result<Self> {
        if values.len() != modes.len() || vectors.ncols() != modes.len() {
            return Err(Error::ModeSetMismatch("eigensystem size mismatch".into()));
        }
        Ok(Self { modes, theta, values, vectors })
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn theta(&self) -> BlochParameter {
        self.theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// k-th eigenfunction as a field (unit coefficient norm).
    pub fn eigenfunction(&self, k: usize) -> TorusField {
        TorusField::from_coeffs(self.modes.clone(), self.vectors.column(k).as_slice().to_vec())
            .expect("column length matches mode set")
    }

    /// Coefficients of `u` in the eigenbasis, `a = Φ* û`.
    pub fn to_eigenbasis(&self, u: &TorusField) -> CVec {
        self.vectors.adjoint() * CVec::from_column_slice(u.coeffs())
    }

    /// Back to Fourier coefficients, `û = Φ a`.
    pub fn from_eigenbasis(&self, a: &CVec) -> TorusField {
        let v = &self.vectors * a;
        TorusField::from_coeffs(self.modes.clone(), v.as_slice().to_vec())
            .expect("length matches")
    }

    /// `Φ g(Λ) Φ*` for a scalar function of the spectrum.
    pub fn functional_calculus<F: Fn(f64) -> f64>(&self, g: F) -> CMat {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::new(g(self.values[k]), 0.0);
        }
        scaled * self.vectors.adjoint()
    }

    /// Apply `g(H)` to a field without forming the full matrix.
    pub fn apply_function<F: Fn(f64) -> f64>(&self, g: F, u: &TorusField) -> TorusField {
        let mut a = self.to_eigenbasis(u);
        for (k, &l) in self.values.iter().enumerate() {
            a[k] *= C64::new(g(l), 0.0);
        }
        self.from_eigenbasis(&a)
    }

    /// Eigen-side `H^s` norm `(Σ_k (1+λ_k²)^{s/2} |⟨ψ_k,u⟩|²)^{1/2}` on
    /// coefficient ℓ² (i.e. `‖u‖_{L²}/(2π)^{d/2}` at `s = 0`).
    pub fn sobolev_norm(&self, u: &TorusField, s: f64) -> f64 {
        let a = self.to_eigenbasis(u);
        a.iter()
            .zip(&self.values)
            .map(|(c, &l)| (1.0 + l * l).powf(s / 2.0) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Fourier-side `H^s` reference norm `(Σ (1+|n|²)^s |û(n)|²)^{1/2}`.
pub fn fourier_hs_norm(u: &TorusField, s: f64) -> f64 {
    u.modes()
        .modes()
        .iter()
        .zip(u.coeffs())
        .map(|(m, c)| {
            let n2 = (m[0] * m[0] + m[1] * m[1]) as f64;
            (1.0 + n2).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Empirical extremal ratios of the eigen-side `H^s` norm against the
/// Fourier-side reference over a sample set: returns `(c₁, c₂)` with
/// `c₁ ≤ ratio ≤ c₂` on every sample.
pub fn check_norm_equivalence(
    eig: &EigenSystem,
    s: f64,
    samples: &[TorusField],
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("norm-equivalence sample set".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for u in samples {
        let num = eig.sobolev_norm(u, s);
        let den = fourier_hs_norm(u, s);
        if den == 0.0 {
            continue;
        }
        let r = num / den;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}
