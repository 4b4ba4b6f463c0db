//! Band-limited functions on `T^d` and their exact norms.
//!
//! A [`TorusField`] is `u = Σ_n û(n) e^{in·x}` over a [`ModeSet`], with the
//! crate-wide Parseval convention `‖u‖²_{L²} = (2π)^d Σ |û(n)|²`.

use crate::modes::{Mode, ModeSet};
use crate::{Error, Result, C64, TAU};
use rand::Rng;
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct TorusField {
    modes: Arc<ModeSet>,
    coeffs: Vec<C64>,
}

impl TorusField {
    pub fn zero(modes: Arc<ModeSet>) -> Self {
        let coeffs = vec![C64::ZERO; modes.len()];
        Self { modes, coeffs }
    }

    pub fn from_coeffs(modes: Arc<ModeSet>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != modes.len() {
            return Err(Error::ModeSetMismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                modes.len()
            )));
        }
        Ok(Self { modes, coeffs })
    }

    /// The plane wave `e^{in·x}`.
    pub fn plane_wave(modes: Arc<ModeSet>, n: Mode) -> Self {
        let mut f = Self::zero(modes);
        let idx = f
            .modes
            .index_of(n)
            .unwrap_or_else(|| panic!("mode {n:?} not in set"));
        f.coeffs[idx] = C64::ONE;
        f
    }

    /// Constant function with value `c`.
    pub fn constant(modes: Arc<ModeSet>, c: C64) -> Self {
        let mut f = Self::zero(modes);
        let idx = f.modes.index_of([0, 0]).expect("mode set lacks 0");
        f.coeffs[idx] = c;
        f
    }

    /// Complex Gaussian coefficients (unit variance per mode).
    pub fn random<R: Rng>(modes: Arc<ModeSet>, rng: &mut R) -> Self {
        let coeffs = (0..modes.len())
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..TAU);
                let r = (-2.0 * u1.ln()).sqrt();
                C64::new(r * u2.cos(), r * u2.sin()) / std::f64::consts::SQRT_2
            })
            .collect();
        Self { modes, coeffs }
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, n: Mode) -> C64 {
        self.modes.index_of(n).map_or(C64::ZERO, |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, n: Mode, c: C64) {
        let idx = self
            .modes
            .index_of(n)
            .unwrap_or_else(|| panic!("mode {n:?} not in set"));
        self.coeffs[idx] = c;
    }

    /// ℓ² norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `L²(T^d)` norm, `(2π)^{d/2}` times the coefficient norm.
    pub fn norm_l2(&self) -> f64 {
        TAU.powi(self.modes.dim() as i32).sqrt() * self.coeff_norm()
    }

    /// `L²` inner product `∫ u v̄`.
    pub fn inner_l2(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.modes.as_ref(), other.modes.as_ref());
        let dot: C64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        dot * TAU.powi(self.modes.dim() as i32)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            modes: self.modes.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.modes.as_ref(), other.modes.as_ref());
        Self {
            modes: self.modes.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.modes.as_ref(), other.modes.as_ref());
        Self {
            modes: self.modes.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Point evaluation `u(x)`.
    pub fn eval(&self, x: &[f64; 2]) -> C64 {
        let mut acc = C64::ZERO;
        for (m, c) in self.modes.modes().iter().zip(&self.coeffs) {
            let phase = m[0] as f64 * x[0] + m[1] as f64 * x[1];
            acc += c * C64::new(0.0, phase).exp();
        }
        acc
    }

    /// Values on the uniform tensor grid `x_j = 2π j / m`, row-major over the
    /// last axis. Separable evaluation for cube sets, direct otherwise.
    pub fn grid_values(&self, m: usize) -> Vec<C64> {
        let d = self.modes.dim();
        if d == 1 {
            let mut out = vec![C64::ZERO; m];
            for (mode, c) in self.modes.modes().iter().zip(&self.coeffs) {
                let w = C64::new(0.0, mode[0] as f64 * TAU / m as f64).exp();
                let mut ph = C64::ONE;
                for o in out.iter_mut() {
                    *o += c * ph;
                    ph *= w;
                }
            }
            out
        } else if let Some(n_max) = self.modes.cutoff() {
            // contract the second axis first: t[n1][x2]
            let side = (2 * n_max + 1) as usize;
            let mut t = vec![C64::ZERO; side * m];
            for (mode, c) in self.modes.modes().iter().zip(&self.coeffs) {
                let i1 = (mode[0] + n_max) as usize;
                let w = C64::new(0.0, mode[1] as f64 * TAU / m as f64).exp();
                let mut ph = C64::ONE;
                for j2 in 0..m {
                    t[i1 * m + j2] += c * ph;
                    ph *= w;
                }
            }
            let mut out = vec![C64::ZERO; m * m];
            for i1 in 0..side {
                let n1 = i1 as i64 - n_max;
                let w = C64::new(0.0, n1 as f64 * TAU / m as f64).exp();
                let mut ph = C64::ONE;
                for j1 in 0..m {
                    let row = &t[i1 * m..(i1 + 1) * m];
                    for (j2, tv) in row.iter().enumerate() {
                        out[j1 * m + j2] += tv * ph;
                    }
                    ph *= w;
                }
            }
            out
        } else {
            let mut out = vec![C64::ZERO; m * m];
            for j1 in 0..m {
                for j2 in 0..m {
                    let x = [TAU * j1 as f64 / m as f64, TAU * j2 as f64 / m as f64];
                    out[j1 * m + j2] = self.eval(&x);
                }
            }
            out
        }
    }

    /// Largest sampled `|Im u|` on an oversampled grid; a real-valuedness
    /// certificate for weights and potentials.
    pub fn max_sampled_imag(&self) -> f64 {
        let m = grid_size(&self.modes, 4);
        self.grid_values(m)
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max)
    }

    /// Exact product of band-limited fields on the enclosing sum cube.
    pub fn multiply(a: &Self, u: &Self) -> Result<Self> {
        if a.modes.dim() != u.modes.dim() {
            return Err(Error::DimensionMismatch(
                "product of fields of different dimension".into(),
            ));
        }
        let n_out = a.modes.max_abs() + u.modes.max_abs();
        let out_modes = ModeSet::cube(a.modes.dim(), n_out);
        let mut coeffs = vec![C64::ZERO; out_modes.len()];
        for (ma, ca) in a.modes.modes().iter().zip(&a.coeffs) {
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            for (mu, cu) in u.modes.modes().iter().zip(&u.coeffs) {
                if cu.norm_sqr() == 0.0 {
                    continue;
                }
                let s = [ma[0] + mu[0], ma[1] + mu[1]];
                let idx = out_modes.index_of(s).expect("sum cube covers all sums");
                coeffs[idx] += ca * cu;
            }
        }
        Ok(Self { modes: out_modes, coeffs })
    }

    /// `L^p(T^d)` norm. `p = 2` and `p = 4` are exact (Parseval and
    /// self-convolution); other `p ≥ 1` use ≥4× oversampled grid quadrature.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!("L^p norm with p = {p} < 1")));
        }
        let d = self.modes.dim() as i32;
        if p == 2.0 {
            return Ok(TAU.powi(d).sqrt() * self.coeff_norm());
        }
        if p == 4.0 {
            // ‖u‖₄⁴ = ‖u²‖₂² = (2π)^d Σ |(u²)^(m)|²
            let sq = Self::multiply(self, self)?;
            let s: f64 = sq.coeffs.iter().map(|c| c.norm_sqr()).sum();
            return Ok((TAU.powi(d) * s).powf(0.25));
        }
        let m = grid_size(&self.modes, 4);
        let vals = self.grid_values(m);
        let cell = (TAU / m as f64).powi(d);
        let integral: f64 = vals.iter().map(|v| v.norm().powf(p)).sum::<f64>() * cell;
        Ok(integral.powf(1.0 / p))
    }

    /// JSON export `{d, N, order:"lex", coeffs:[[re,im],...]}` (cube sets only).
    pub fn to_json(&self) -> Result<String> {
        let n = self.modes.cutoff().ok_or_else(|| {
            Error::Serialization("JSON export requires a cube mode set".into())
        })?;
        let coeffs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        let v = serde_json::json!({
            "d": self.modes.dim(),
            "N": n,
            "order": "lex",
            "coeffs": coeffs,
        });
        serde_json::to_string(&v).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        let d = v["d"].as_u64().ok_or_else(|| Error::Serialization("missing d".into()))? as usize;
        let n = v["N"].as_i64().ok_or_else(|| Error::Serialization("missing N".into()))?;
        let order = v["order"].as_str().unwrap_or("lex");
        if order != "lex" {
            return Err(Error::Serialization(format!("unknown order {order}")));
        }
        let arr = v["coeffs"]
            .as_array()
            .ok_or_else(|| Error::Serialization("missing coeffs".into()))?;
        let coeffs: Vec<C64> = arr
            .iter()
            .map(|e| {
                let re = e[0].as_f64().unwrap_or(0.0);
                let im = e[1].as_f64().unwrap_or(0.0);
                C64::new(re, im)
            })
            .collect();
        let modes = ModeSet::cube(d, n);
        Self::from_coeffs(modes, coeffs)
    }

    /// Binary export: 16-byte header (magic `BLOB`, u32 d, u32 N, 4 zero
    /// bytes), then little-endian f64 interleaved re/im in lex order.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        let n = self.modes.cutoff().ok_or_else(|| {
            Error::Serialization("binary export requires a cube mode set".into())
        })?;
        w.write_all(b"BLOB")?;
        w.write_all(&(self.modes.dim() as u32).to_le_bytes())?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != b"BLOB" {
            return Err(Error::Serialization("bad magic".into()));
        }
        let d = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as i64;
        let modes = ModeSet::cube(d, n);
        let mut coeffs = Vec::with_capacity(modes.len());
        let mut buf = [0u8; 16];
        for _ in 0..modes.len() {
            r.read_exact(&mut buf)?;
            coeffs.push(C64::new(
                f64::from_le_bytes(buf[0..8].try_into().unwrap()),
                f64::from_le_bytes(buf[8..16].try_into().unwrap()),
            ));
        }
        Self::from_coeffs(modes, coeffs)
    }
}

/// Oversampled grid size for quadrature: at least `factor` × Nyquist.
pub fn grid_size(modes: &ModeSet, factor: usize) -> usize {
    let n = modes.max_abs() as usize;
    (factor * (2 * n + 1)).max(8)
}

/// Closed-form potentials and observation weights used across the harness.
pub mod catalog {
    use super::*;

    /// `cos(x₁)` on the given mode set's dimension (requires `N ≥ 1`).
    pub fn cos_x(modes: &Arc<ModeSet>) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        f.set_coeff([1, 0], C64::new(0.5, 0.0));
        f.set_coeff([-1, 0], C64::new(0.5, 0.0));
        f
    }

    /// `cos(x₁) + cos(x₂)` (d = 2).
    pub fn cos_x_plus_cos_y(modes: &Arc<ModeSet>) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        f.set_coeff([1, 0], C64::new(0.5, 0.0));
        f.set_coeff([-1, 0], C64::new(0.5, 0.0));
        f.set_coeff([0, 1], C64::new(0.5, 0.0));
        f.set_coeff([0, -1], C64::new(0.5, 0.0));
        f
    }

    /// `cos(x₁)·cos(x₂)` (d = 2).
    pub fn cos_x_cos_y(modes: &Arc<ModeSet>) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        for s1 in [-1i64, 1] {
            for s2 in [-1i64, 1] {
                f.set_coeff([s1, s2], C64::new(0.25, 0.0));
            }
        }
        f
    }

    /// `cos(x₂)` (d = 2).
    pub fn cos_y(modes: &Arc<ModeSet>) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        f.set_coeff([0, 1], C64::new(0.5, 0.0));
        f.set_coeff([0, -1], C64::new(0.5, 0.0));
        f
    }

    /// Constant `c`.
    pub fn constant(modes: &Arc<ModeSet>, c: f64) -> TorusField {
        TorusField::constant(modes.clone(), C64::new(c, 0.0))
    }

    /// Exact Fourier coefficient of `1_(a,b)` at frequency `ν`.
    fn interval_coeff(a: f64, b: f64, nu: i64) -> C64 {
        if nu == 0 {
            C64::new((b - a) / TAU, 0.0)
        } else {
            let nu_f = nu as f64;
            (C64::new(0.0, -nu_f * a).exp() - C64::new(0.0, -nu_f * b).exp())
                / C64::new(0.0, TAU * nu_f)
        }
    }

    /// Fejér mean of the indicator `1_(a,b)(x₁)`, constant in the remaining
    /// axis. The order is capped at the set's band so the result is a genuine
    /// Fejér mean, hence pointwise ≥ 0 — suitable as an observation weight.
    /// Returns the field and the effective smoothing order.
    pub fn smoothed_interval_x_with_order(
        modes: &Arc<ModeSet>,
        a: f64,
        b: f64,
        order: i64,
    ) -> (TorusField, i64) {
        let mut f = TorusField::zero(modes.clone());
        let order_eff = modes.max_abs().min(order).max(1);
        for nu in -order_eff..=order_eff {
            let fejer = 1.0 - (nu.abs() as f64) / (order_eff as f64 + 1.0);
            if modes.contains([nu, 0]) {
                f.set_coeff([nu, 0], interval_coeff(a, b, nu) * fejer);
            }
        }
        (f, order_eff)
    }

    /// [`smoothed_interval_x_with_order`] without the order report.
    pub fn smoothed_interval_x(modes: &Arc<ModeSet>, a: f64, b: f64, order: i64) -> TorusField {
        smoothed_interval_x_with_order(modes, a, b, order).0
    }

    /// Band-truncated indicator of `(a, b)` in `x₁` with Fejér damping of a
    /// prescribed (uncapped) order — a mollified-potential family whose
    /// operator action converges to [`truncated_interval_x`] as `order → ∞`.
    /// Real-valued but not pointwise ≥ 0; intended for potentials, not
    /// weights.
    pub fn fejer_damped_interval_x(
        modes: &Arc<ModeSet>,
        a: f64,
        b: f64,
        order: i64,
    ) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        let n_max = modes.max_abs();
        for nu in -n_max..=n_max {
            let fejer = (1.0 - (nu.abs() as f64) / (order as f64 + 1.0)).max(0.0);
            if modes.contains([nu, 0]) {
                f.set_coeff([nu, 0], interval_coeff(a, b, nu) * fejer);
            }
        }
        f
    }

    /// Sharp band truncation of the indicator `1_(a,b)(x₁)` (no damping).
    pub fn truncated_interval_x(modes: &Arc<ModeSet>, a: f64, b: f64) -> TorusField {
        let mut f = TorusField::zero(modes.clone());
        let n_max = modes.max_abs();
        for nu in -n_max..=n_max {
            if modes.contains([nu, 0]) {
                f.set_coeff([nu, 0], interval_coeff(a, b, nu));
            }
        }
        f
    }

    /// Tensor product of Fejér means `1_(a1,b1)(x₁)·1_(a2,b2)(x₂)` (d = 2),
    /// pointwise ≥ 0; the order is capped at the band as in
    /// [`smoothed_interval_x_with_order`].
    pub fn smoothed_box_2d(
        modes: &Arc<ModeSet>,
        ab1: (f64, f64),
        ab2: (f64, f64),
        order: i64,
    ) -> TorusField {
        assert_eq!(modes.dim(), 2);
        let order_eff = modes.max_abs().min(order).max(1);
        let mut f = TorusField::zero(modes.clone());
        for n1 in -order_eff..=order_eff {
            for n2 in -order_eff..=order_eff {
                if modes.contains([n1, n2]) {
                    let fejer = (1.0 - (n1.abs() as f64) / (order_eff as f64 + 1.0))
                        * (1.0 - (n2.abs() as f64) / (order_eff as f64 + 1.0));
                    let c = interval_coeff(ab1.0, ab1.1, n1) * interval_coeff(ab2.0, ab2.1, n2);
                    f.set_coeff([n1, n2], c * fejer);
                }
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn parseval_l2() {
        let ms = ModeSet::cube(1, 3);
        let mut u = TorusField::zero(ms);
        u.set_coeff([1, 0], C64::new(1.0, 0.0));
        u.set_coeff([-2, 0], C64::new(0.0, 2.0));
        // ‖u‖² = 2π (1 + 4)
        assert_relative_eq!(u.norm_l2(), (TAU * 5.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(u.lp_norm(2.0).unwrap(), (TAU * 5.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn l4_of_plane_wave_1d() {
        // |e^{ix}| ≡ 1 so ‖u‖₄ = (2π)^{1/4}
        let ms = ModeSet::cube(1, 1);
        let u = TorusField::plane_wave(ms, [1, 0]);
        assert_relative_eq!(u.lp_norm(4.0).unwrap(), TAU.powf(0.25), max_relative = 1e-13);
    }

    #[test]
    fn l4_of_one_plus_wave() {
        // ‖1 + e^{ix}‖₄⁴ = ∫ (2 + 2cos x)² = 2π·6
        let ms = ModeSet::cube(1, 1);
        let mut u = TorusField::zero(ms);
        u.set_coeff([0, 0], C64::ONE);
        u.set_coeff([1, 0], C64::ONE);
        let l4 = u.lp_norm(4.0).unwrap();
        assert_relative_eq!(l4.powi(4), TAU * 6.0, max_relative = 1e-13);
    }

    #[test]
    fn multiply_cos_by_wave() {
        // cos(x)·e^{ix} = (e^{2ix} + 1)/2
        let ms = ModeSet::cube(1, 1);
        let a = catalog::cos_x(&ms);
        let u = TorusField::plane_wave(ms, [1, 0]);
        let p = TorusField::multiply(&a, &u).unwrap();
        assert_relative_eq!(p.coeff([2, 0]).re, 0.5, max_relative = 1e-15);
        assert_relative_eq!(p.coeff([0, 0]).re, 0.5, max_relative = 1e-15);
        assert!(p.coeff([1, 0]).norm() < 1e-15);
    }

    #[test]
    fn lp_rejects_p_below_one() {
        let ms = ModeSet::cube(1, 1);
        let u = TorusField::plane_wave(ms, [1, 0]);
        assert!(u.lp_norm(0.5).is_err());
    }

    #[test]
    fn quadrature_lp_close_to_exact_on_l2() {
        let ms = ModeSet::cube(2, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let u = TorusField::random(ms, &mut rng);
        // p = 2 exact vs p = 2.0000 quadrature route through p = 3 sanity
        let l3 = u.lp_norm(3.0).unwrap();
        assert!(l3.is_finite() && l3 > 0.0);
    }

    #[test]
    fn smoothed_indicator_nonneg_and_mass() {
        let ms = ModeSet::cube(1, 16);
        let b = catalog::smoothed_interval_x(&ms, 0.0, std::f64::consts::PI, 16);
        let m = grid_size(&ms, 4);
        let vals = b.grid_values(m);
        for v in &vals {
            assert!(v.re > -1e-12, "Fejér mean must be nonnegative");
            assert!(v.im.abs() < 1e-12);
        }
        // mean value = |interval|/2π = 1/2
        assert_relative_eq!(b.coeff([0, 0]).re, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn json_roundtrip() {
        let ms = ModeSet::cube(2, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = TorusField::random(ms, &mut rng);
        let s = u.to_json().unwrap();
        let v = TorusField::from_json(&s).unwrap();
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-15);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-15);
        }
    }

    #[test]
    fn binary_roundtrip_bit_exact() {
        let ms = ModeSet::cube(1, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = TorusField::random(ms, &mut rng);
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"BLOB");
        assert_eq!(buf.len(), 16 + 16 * u.coeffs().len());
        let v = TorusField::read_binary(&mut buf.as_slice()).unwrap();
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
