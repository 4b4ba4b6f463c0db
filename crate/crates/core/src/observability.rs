//! Observability Gramians and constants, HUM controls, frequency-cutoff
//! projectors, dyadic partitions and the unique-continuation probe.
//!
//! The Gramian of the pair `(b, T)` is the quadratic form
//! `⟨G v₀, v₀⟩ = ∫₀^T ∫ b |e^{-itH} v₀|² dz dt` on coefficient ℓ²; in eigen
//! coordinates `G[j,k] = B[j,k]·τ(λ_j - λ_k, T)` with `B = Φ* M_b Φ` and
//! `τ(ω,T) = (e^{iωT} - 1)/(iω)`. The observability constant is
//! `C_obs = 1/λ_min(G)`.

use crate::field::{self, TorusField};
use crate::linalg::{self, CMat, CVec};
use crate::modes::ModeSet;
use crate::propagator::evolve;
use crate::spectral::EigenSystem;
use crate::{Error, Result, C64, TAU};
use std::sync::Arc;

/// `τ(ω,T) = ∫₀^T e^{iωt} dt`, with a series branch near `ωT = 0` to avoid
/// cancellation (near-degenerate eigenvalue pairs are common at half-lattice
/// symmetry points).
pub fn tau_integral(omega: f64, t_final: f64) -> C64 {
    let z = omega * t_final;
    if z.abs() < 1e-6 {
        // T·φ₁(iωT), φ₁(w) = 1 + w/2 + w²/6 + w³/24 + w⁴/120
        let w = C64::new(0.0, z);
        let phi1 = C64::ONE
            + w * C64::new(0.5, 0.0)
            + w * w * C64::new(1.0 / 6.0, 0.0)
            + w * w * w * C64::new(1.0 / 24.0, 0.0)
            + w * w * w * w * C64::new(1.0 / 120.0, 0.0);
        C64::new(t_final, 0.0) * phi1
    } else {
        (C64::new(0.0, z).exp() - C64::ONE) / C64::new(0.0, omega)
    }
}

/// Multiplication-by-`b` matrix on the mode basis, `(M_b)[i,j] = b̂(n_i-n_j)`.
pub fn weight_matrix(modes: &ModeSet, b: &TorusField) -> CMat {
    let n = modes.len();
    let mut m = CMat::zeros(n, n);
    for (i, ni) in modes.modes().iter().enumerate() {
        for (j, nj) in modes.modes().iter().enumerate() {
            m[(i, j)] = b.coeff([ni[0] - nj[0], ni[1] - nj[1]]);
        }
    }
    m
}

/// Time-integrated observation form in eigen coordinates.
#[derive(Debug, Clone)]
pub struct Gramian {
    eig: EigenSystem,
    /// `B = Φ* M_b Φ`.
    b_eig: CMat,
    /// `G[j,k] = B[j,k] τ(λ_j - λ_k, T)`.
    matrix: CMat,
    t_final: f64,
}

/// Assemble the Gramian of `(b, T)`. Requires `b ≥ 0` (sampled) and `T > 0`.
pub fn gramian(eig: &EigenSystem, b: &TorusField, t_final: f64) -> Result<Gramian> {
    if t_final <= 0.0 {
        return Err(Error::InvalidParameter(format!("T = {t_final} ≤ 0")));
    }
    let m = field::grid_size(b.modes(), 4);
    let min_sample = b
        .grid_values(m)
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min);
    if min_sample < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "weight b has negative samples (min {min_sample:.3e})"
        )));
    }
    let mb = weight_matrix(eig.modes(), b);
    let b_eig = eig.vectors().adjoint() * mb * eig.vectors();
    let k = eig.len();
    let mut g = CMat::zeros(k, k);
    for j in 0..k {
        for l in 0..k {
            g[(j, l)] = b_eig[(j, l)] * tau_integral(eig.values()[j] - eig.values()[l], t_final);
        }
    }
    Ok(Gramian { eig: eig.clone(), b_eig, matrix: g, t_final })
}

impl Gramian {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eig(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Quadratic form on a coefficient-space field.
    pub fn observation_integral(&self, v0: &TorusField) -> f64 {
        let a = self.eig.to_eigenbasis(v0);
        ((&self.matrix * &a).adjoint() * &a)[(0, 0)].re
    }

    /// Rebuild by composite Gauss-Legendre with `points` total nodes and
    /// return the relative Frobenius deviation (the quadrature oracle).
    pub fn quadrature_deviation(&self, points: usize) -> f64 {
        let panels = (points / 8).max(1);
        let k = self.eig.len();
        let mut g = CMat::zeros(k, k);
        let dt = self.t_final / panels as f64;
        for p in 0..panels {
            let t0 = p as f64 * dt;
            for (x, w) in crate::propagator::GL8_NODES
                .iter()
                .zip(crate::propagator::GL8_WEIGHTS)
            {
                let t = t0 + 0.5 * dt * (x + 1.0);
                let weight = 0.5 * dt * w;
                for j in 0..k {
                    for l in 0..k {
                        let phase =
                            C64::new(0.0, t * (self.eig.values()[j] - self.eig.values()[l])).exp();
                        g[(j, l)] += self.b_eig[(j, l)] * phase * weight;
                    }
                }
            }
        }
        linalg::fro_norm(&(&g - &self.matrix)) / linalg::fro_norm(&self.matrix).max(1e-300)
    }

    /// The time-reversed form `Ĝ = e^{-iTH} G e^{iTH}` steering the HUM
    /// construction (same spectrum as `G`).
    fn time_reversed(&self) -> CMat {
        let k = self.eig.len();
        let mut g = CMat::zeros(k, k);
        for j in 0..k {
            for l in 0..k {
                let om = self.eig.values()[j] - self.eig.values()[l];
                g[(j, l)] = self.b_eig[(j, l)] * tau_integral(om, self.t_final).conj();
            }
        }
        g
    }
}

/// Extremal eigenpair of a Gramian and the observability constant.
#[derive(Debug, Clone)]
pub struct ObservabilityReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `1/λ_min`, absent when the Gramian is numerically singular.
    pub c_obs: Option<f64>,
    pub observable: bool,
    /// Extremal vector in coefficient space, unit ℓ² norm.
    pub extremal: TorusField,
    pub theta: [f64; 2],
    pub t_final: f64,
    pub n_cutoff: i64,
    pub potential_tag: String,
    pub weight_tag: String,
}

/// λ_min below this floor is reported as "not observable at this truncation".
pub const OBSERVABILITY_FLOOR: f64 = 1e-13;

/// Extract `λ_min`, the extremal vector and `C_obs = 1/λ_min`.
pub fn observability_constant(
    g: &Gramian,
    potential_tag: &str,
    weight_tag: &str,
) -> ObservabilityReport {
    let (values, vectors) = linalg::hermitian_eigen(&g.matrix);
    let lambda_min = values[0];
    let lambda_max = *values.last().unwrap();
    let observable = lambda_min > OBSERVABILITY_FLOOR;
    let extremal_eig = CVec::from_column_slice(vectors.column(0).as_slice());
    let extremal = g.eig.from_eigenbasis(&extremal_eig);
    ObservabilityReport {
        lambda_min,
        lambda_max,
        c_obs: observable.then(|| 1.0 / lambda_min),
        observable,
        extremal,
        theta: *g.eig.theta().components(),
        t_final: g.t_final,
        n_cutoff: g.eig.modes().cutoff().unwrap_or(-1),
        potential_tag: potential_tag.to_string(),
        weight_tag: weight_tag.to_string(),
    }
}

impl ObservabilityReport {
    /// JSON export with the documented key set.
    pub fn to_json(&self, packet: Option<(f64, f64, usize)>) -> String {
        let packet_v = match packet {
            Some((h, rho, rank)) => serde_json::json!({"h": h, "rho": rho, "rank": rank}),
            None => serde_json::Value::Null,
        };
        serde_json::json!({
            "theta": self.theta,
            "potential_tag": self.potential_tag,
            "weight_tag": self.weight_tag,
            "T": self.t_final,
            "N": self.n_cutoff,
            "lambda_min": self.lambda_min,
            "c_obs": self.c_obs,
            "packet": packet_v,
        })
        .to_string()
    }
}

/// A HUM control steering `y(0) = 0` to `y(T) = y₁` for
/// `i∂_t y = Hy + h(t)`, with `h(t) = i·b·e^{-i(t-T)H} Ĝ^{-1} y₁` and
/// `Ĝ = e^{-iTH} G e^{iTH}` the time-reversed Gramian.
///
/// The minimal-norm cost is `‖h‖²_b = ∫₀^T ∫ b|φ(t)|² = ⟨Ĝ^{-1}y₁, y₁⟩_{L²}`.
pub struct HumControl {
    eig: EigenSystem,
    mb: CMat,
    /// `Ĝ^{-1} y₁` in eigen coordinates.
    w_eig: CVec,
    pub t_final: f64,
    /// `⟨Ĝ^{-1}y₁, y₁⟩_{L²}`, the predicted control energy.
    pub cost: f64,
}

/// Build the HUM control for target `y₁`. Fails when the Gramian is not
/// invertible at this truncation.
pub fn hum_control(
    eig: &EigenSystem,
    b: &TorusField,
    t_final: f64,
    y1: &TorusField,
) -> Result<HumControl> {
    let g = gramian(eig, b, t_final)?;
    let (gvals, _) = linalg::hermitian_eigen(&g.matrix);
    if gvals[0] <= OBSERVABILITY_FLOOR {
        return Err(Error::GramianSingular(gvals[0]));
    }
    let g_rev = g.time_reversed();
    let y1_eig = eig.to_eigenbasis(y1);
    let w_eig = linalg::lu_solve(&g_rev, &y1_eig)?;
    let d = eig.modes().dim() as i32;
    let cost = TAU.powi(d) * (y1_eig.adjoint() * &w_eig)[(0, 0)].re;
    let mb = weight_matrix(eig.modes(), b);
    Ok(HumControl { eig: eig.clone(), mb, w_eig, t_final, cost })
}

impl HumControl {
    /// The control field `h(t) = i·b·e^{i(T-t)H} Ĝ^{-1} y₁`.
    pub fn at(&self, t: f64) -> TorusField {
        let mut a = self.w_eig.clone();
        for (k, &l) in self.eig.values().iter().enumerate() {
            a[k] *= C64::new(0.0, (self.t_final - t) * l).exp();
        }
        let phi = self.eig.from_eigenbasis(&a);
        let hb = &self.mb * CVec::from_column_slice(phi.coeffs()) * C64::new(0.0, 1.0);
        TorusField::from_coeffs(self.eig.modes().clone(), hb.as_slice().to_vec())
            .expect("length matches")
    }

    /// Exact endpoint `y(T) = -i ∫₀^T e^{-i(T-s)H} h(s) ds` via the
    /// closed-form τ integrals (no time stepping).
    pub fn endpoint(&self) -> TorusField {
        // y(T) in eigen coords: Σ_l [∫ e^{-i(T-s)(λ_j)}·i·(M_b φ(s))_j ds]
        // = Ĝ w in eigen coordinates, by construction.
        let b_eig = self.eig.vectors().adjoint() * &self.mb * self.eig.vectors();
        let k = self.eig.len();
        let mut g_rev = CMat::zeros(k, k);
        for j in 0..k {
            for l in 0..k {
                let om = self.eig.values()[j] - self.eig.values()[l];
                g_rev[(j, l)] = b_eig[(j, l)] * tau_integral(om, self.t_final).conj();
            }
        }
        let y_eig = g_rev * &self.w_eig;
        self.eig.from_eigenbasis(&y_eig)
    }

    /// `∫₀^T ∫ b |φ(t)|² dz dt` recomputed by quadrature, for cross-checks.
    pub fn cost_by_quadrature(&self, panels: usize) -> f64 {
        let d = self.eig.modes().dim() as i32;
        let dt = self.t_final / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let t0 = p as f64 * dt;
            for (x, w) in crate::propagator::GL8_NODES
                .iter()
                .zip(crate::propagator::GL8_WEIGHTS)
            {
                let t = t0 + 0.5 * dt * (x + 1.0);
                let weight = 0.5 * dt * w;
                let mut a = self.w_eig.clone();
                for (k, &l) in self.eig.values().iter().enumerate() {
                    a[k] *= C64::new(0.0, (self.t_final - t) * l).exp();
                }
                let phi = self.eig.from_eigenbasis(&a);
                let phi_vec = CVec::from_column_slice(phi.coeffs());
                let form = (phi_vec.adjoint() * &self.mb * &phi_vec)[(0, 0)].re;
                acc += weight * form;
            }
        }
        TAU.powi(d) * acc
    }
}

/// A smooth compactly supported bump `χ ∈ C_c^∞((-1,1))`, `χ = 1` on
/// `[-plateau, plateau]`, built from the standard `exp(-1/s)` transition.
#[derive(Debug, Clone, Copy)]
pub struct BumpFunction {
    plateau: f64,
}

fn smooth_step_raw(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth decreasing transition: 1 at `u ≤ 0`, 0 at `u ≥ 1`.
pub(crate) fn smooth_down(u: f64) -> f64 {
    let a = smooth_step_raw(1.0 - u);
    let b = smooth_step_raw(u);
    if a + b == 0.0 {
        return if u <= 0.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

impl BumpFunction {
    pub fn new(plateau: f64) -> Result<Self> {
        if !(0.0 < plateau && plateau < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bump plateau {plateau} not in (0,1)"
            )));
        }
        Ok(Self { plateau })
    }

    /// The default plateau `1/2`.
    pub fn standard() -> Self {
        Self { plateau: 0.5 }
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn eval(&self, s: f64) -> f64 {
        let a = s.abs();
        if a <= self.plateau {
            1.0
        } else if a >= 1.0 {
            0.0
        } else {
            smooth_down((a - self.plateau) / (1.0 - self.plateau))
        }
    }
}

/// `Π_{h,ρ,θ,V} u₀ = χ((h²H - 1)/ρ) u₀` by functional calculus.
pub fn frequency_cutoff(
    eig: &EigenSystem,
    h: f64,
    rho: f64,
    u0: &TorusField,
    chi: &BumpFunction,
) -> Result<TorusField> {
    if h <= 0.0 || rho <= 0.0 {
        return Err(Error::InvalidParameter(format!("h = {h}, ρ = {rho} must be > 0")));
    }
    Ok(eig.apply_function(|l| chi.eval((h * h * l - 1.0) / rho), u0))
}

/// One `(h, ρ)` cell of a packet-observability scan.
#[derive(Debug, Clone)]
pub struct PacketRow {
    pub h: f64,
    pub rho: f64,
    /// Number of eigenmodes inside the cutoff support.
    pub rank: usize,
    /// `1/λ_min` of the Gramian compressed to the packet, `None` for rank 0.
    pub constant: Option<f64>,
}

/// Packet constants `1/λ_min(G|_range(Π))` over an `(h, ρ)` grid. Rank-0
/// packets are kept in the table with `constant = None`.
pub fn packet_observability_scan(
    eig: &EigenSystem,
    b: &TorusField,
    t_final: f64,
    chi: &BumpFunction,
    h_grid: &[f64],
    rho_grid: &[f64],
) -> Result<Vec<PacketRow>> {
    if h_grid.is_empty() || rho_grid.is_empty() {
        return Err(Error::EmptyInput("packet scan grids".into()));
    }
    let g = gramian(eig, b, t_final)?;
    let mut rows = Vec::new();
    for &h in h_grid {
        for &rho in rho_grid {
            let support: Vec<usize> = eig
                .values()
                .iter()
                .enumerate()
                .filter(|(_, &l)| chi.eval((h * h * l - 1.0) / rho) > 0.0)
                .map(|(k, _)| k)
                .collect();
            let rank = support.len();
            if rank == 0 {
                rows.push(PacketRow { h, rho, rank, constant: None });
                continue;
            }
            let mut sub = CMat::zeros(rank, rank);
            for (a, &j) in support.iter().enumerate() {
                for (c, &l) in support.iter().enumerate() {
                    sub[(a, c)] = g.matrix[(j, l)];
                }
            }
            let (vals, _) = linalg::hermitian_eigen(&sub);
            let lmin = vals[0];
            rows.push(PacketRow {
                h,
                rho,
                rank,
                constant: (lmin > OBSERVABILITY_FLOOR).then(|| 1.0 / lmin),
            });
        }
    }
    Ok(rows)
}

/// Littlewood-Paley-style partition `φ₀²(r) + Σ_{k≥1} φ_k(r) = 1` on `R⁺`
/// with ratio `R`, `φ_k(r) = φ²(R^{-k} r)` and `supp φ ⊂ (R^{-1}, R)`.
///
/// Built from a monotone smooth step ψ (1 below `R^{-1}`, 0 above 1):
/// `φ₀² = ψ(r/R)`, `φ² (s) = ψ(s/R) - ψ(s)`.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    ratio: f64,
}

/// Construct a partition with ratio `R > 1` (default scale 4 elsewhere).
pub fn dyadic_partition(ratio: f64) -> Result<DyadicPartition> {
    if ratio <= 1.0 {
        return Err(Error::InvalidParameter(format!("dyadic ratio R = {ratio} ≤ 1")));
    }
    Ok(DyadicPartition { ratio })
}

impl DyadicPartition {
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Monotone step: 1 for `r ≤ 1/R`, 0 for `r ≥ 1`.
    fn step(&self, r: f64) -> f64 {
        let lo = 1.0 / self.ratio;
        if r <= lo {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            smooth_down((r - lo) / (1.0 - lo))
        }
    }

    pub fn phi0_sq(&self, r: f64) -> f64 {
        self.step(r / self.ratio)
    }

    /// `φ²(s)`, supported in `(R^{-1}, R)`.
    pub fn phi_sq(&self, s: f64) -> f64 {
        (self.step(s / self.ratio) - self.step(s)).max(0.0)
    }

    /// `φ_k(r) = φ²(R^{-k} r)`, `k ≥ 1`.
    pub fn phi_k(&self, k: usize, r: f64) -> f64 {
        self.phi_sq(self.ratio.powi(-(k as i32)) * r)
    }

    /// Number of bands needed to cover `r ≤ r_max`.
    pub fn bands_for(&self, r_max: f64) -> usize {
        if r_max <= 1.0 {
            return 2;
        }
        (r_max.ln() / self.ratio.ln()).ceil() as usize + 2
    }

    /// `sup |1 - φ₀² - Σ φ_k|` over a grid.
    pub fn partition_defect(&self, grid: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &r in grid {
            if r < 0.0 {
                continue;
            }
            let kmax = self.bands_for(r.max(1.0));
            let mut s = self.phi0_sq(r);
            for k in 1..=kmax {
                s += self.phi_k(k, r);
            }
            worst = worst.max((1.0 - s).abs());
        }
        worst
    }

    /// Band energies `e_0 = ⟨φ₀²(H)u,u⟩`, `e_k = ⟨φ_k(H)u,u⟩` (quadratic
    /// forms in the spectral calculus); they sum to `‖u‖²_ℓ²`.
    pub fn band_energies(&self, eig: &EigenSystem, u: &TorusField) -> Vec<f64> {
        let a = eig.to_eigenbasis(u);
        let lmax = eig.values().iter().fold(1.0f64, |m, &l| m.max(l.abs()));
        let kmax = self.bands_for(lmax);
        let mut energies = vec![0.0; kmax + 1];
        for (j, &l) in eig.values().iter().enumerate() {
            let w = a[j].norm_sqr();
            let r = l.max(0.0);
            energies[0] += self.phi0_sq(r) * w;
            for k in 1..=kmax {
                energies[k] += self.phi_k(k, r) * w;
            }
        }
        energies
    }
}

/// Empirical window `(c₁', c₂')` for the dyadic-band characterization of
/// `H^s`: ratios of `Σ_k R^{2ks} e_k(u)` against the squared Fourier-side
/// `H^s` norm over the samples.
pub fn check_dyadic_equivalence(
    eig: &EigenSystem,
    part: &DyadicPartition,
    s: f64,
    samples: &[TorusField],
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("dyadic equivalence sample set".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for u in samples {
        let energies = part.band_energies(eig, u);
        let num: f64 = energies
            .iter()
            .enumerate()
            .map(|(k, &e)| part.ratio().powf(2.0 * k as f64 * s) * e)
            .sum();
        let den = crate::spectral::fourier_hs_norm(u, s).powi(2);
        if den == 0.0 {
            continue;
        }
        let r = num / den;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// `min_k ∫ b |ψ_k|² / ‖ψ_k‖²` over the first `count` eigenfunctions, with
/// the minimizing index. Errors on numerically vanishing `b`.
pub fn unique_continuation_probe(
    eig: &EigenSystem,
    b: &TorusField,
    count: usize,
) -> Result<(f64, usize)> {
    if b.coeff([0, 0]).re <= 1e-12 {
        return Err(Error::InvalidParameter(
            "weight b is numerically zero (vanishing mean)".into(),
        ));
    }
    let mb = weight_matrix(eig.modes(), b);
    let count = count.min(eig.len());
    if count == 0 {
        return Err(Error::EmptyInput("eigenfunction count".into()));
    }
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 0..count {
        let psi = CVec::from_column_slice(eig.vectors().column(k).as_slice());
        let val = (psi.adjoint() * &mb * &psi)[(0, 0)].re;
        if val < best {
            best = val;
            best_k = k;
        }
    }
    Ok((best, best_k))
}

/// Eigensystems over a θ-grid with the observability constant per fiber
/// (shared by sweeps and the Floquet lift).
pub fn constant_over_thetas(
    modes: &Arc<ModeSet>,
    thetas: &[crate::spectral::BlochParameter],
    v: &TorusField,
    b: &TorusField,
    t_final: f64,
    mode: crate::ExecMode,
) -> Result<Vec<ObservabilityReport>> {
    let items: Vec<crate::spectral::BlochParameter> = thetas.to_vec();
    let out = crate::exec::map_collect(mode, items, |theta| {
        let eig = crate::propagator::eigensystem_for(modes, theta, v)?;
        let g = gramian(&eig, b, t_final)?;
        Ok(observability_constant(&g, "custom", "custom"))
    });
    out.into_iter().collect()
}

/// Check `‖u₀‖² ≤ C · ∫∫ b|e^{-itH}u₀|²` directly for one field by the
/// closed-form Gramian quadratic form. Returns the two sides.
pub fn observability_inequality_sides(
    g: &Gramian,
    u0: &TorusField,
    c_obs: f64,
) -> (f64, f64) {
    let d = g.eig().modes().dim() as i32;
    let lhs = u0.norm_l2().powi(2);
    let rhs = c_obs * TAU.powi(d) * g.observation_integral(u0);
    (lhs, rhs)
}

// Re-exported for convenience in sweeps.
pub use crate::propagator::eigensystem_for;
