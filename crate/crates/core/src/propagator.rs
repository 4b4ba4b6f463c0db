//! Time evolution `e^{-itH_{θ,V}}`, Duhamel solutions with sources,
//! parameter-stability tables and mixed-norm (Strichartz) ratios.
//!
//! Propagation is exact eigen-propagation `Φ e^{-itΛ} Φ*`, so no
//! time-discretization error enters downstream observability quantities;
//! only source integrals use quadrature (composite Gauss-Legendre with the
//! order recorded in the output).

use crate::exec::{self, ExecMode};
use crate::field::{self, TorusField};
use crate::spectral::{assemble_operator, eigendecompose, BlochParameter, EigenSystem};
use crate::{Error, Result, C64, TAU};
use std::sync::Arc;

/// 8-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
pub(crate) const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Snapshots of a solution, with the quadrature bookkeeping needed to check
/// the a-priori bound `‖v‖_{L∞L²} ≤ ‖v₀‖ + ‖f‖_{L¹L²}`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TorusField>,
    /// Gauss-Legendre nodes per step used for the Duhamel integral.
    pub quad_order: usize,
    /// `‖f‖_{L¹(0,T;L²)}` by the same quadrature.
    pub source_l1_l2: f64,
    /// `max_j ‖v(t_j)‖_{L²}` over the snapshots.
    pub sup_l2: f64,
}

impl Trajectory {
    /// CSV export with columns `t,norm_l2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm_l2\n");
        for (t, u) in self.times.iter().zip(&self.states) {
            s.push_str(&format!("{t},{}\n", u.norm_l2()));
        }
        s
    }
}

/// Declared time regularity of a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRegularity {
    Continuous,
    PiecewiseConstant,
}

/// A time-dependent source `t ↦ f(t)` on a fixed mode set.
pub struct SourceTerm {
    eval: Box<dyn Fn(f64) -> TorusField + Send + Sync>,
    regularity: SourceRegularity,
    is_zero: bool,
}

impl SourceTerm {
    pub fn new<F>(regularity: SourceRegularity, eval: F) -> Self
    where
        F: Fn(f64) -> TorusField + Send + Sync + 'static,
    {
        Self { eval: Box::new(eval), regularity, is_zero: false }
    }

    /// The identically-zero source; the Duhamel integral is skipped so the
    /// result coincides exactly with homogeneous evolution.
    pub fn zero() -> Self {
        Self {
            eval: Box::new(|_| unreachable!("zero source is never evaluated")),
            regularity: SourceRegularity::Continuous,
            is_zero: true,
        }
    }

    pub fn regularity(&self) -> SourceRegularity {
        self.regularity
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    pub fn at(&self, t: f64) -> TorusField {
        (self.eval)(t)
    }
}

/// `e^{-itH} u₀` by exact eigen-propagation.
pub fn evolve(eig: &EigenSystem, u0: &TorusField, t: f64) -> TorusField {
    let mut a = eig.to_eigenbasis(u0);
    for (k, &l) in eig.values().iter().enumerate() {
        a[k] *= C64::new(0.0, -t * l).exp();
    }
    eig.from_eigenbasis(&a)
}

/// Solve `i∂_t v = Hv + f`, `v(0) = u₀`, on `[0, T]` with `steps`
/// composite intervals; snapshots at `t_j = jT/steps`.
///
/// Each step applies the exact propagator and an 8-point Gauss-Legendre
/// Duhamel integral `-i ∫ e^{-i(t_{j+1}-s)H} f(s) ds`. The a-priori bound
/// `‖v‖_{L∞L²} ≤ ‖v₀‖ + ‖f‖_{L¹L²}` is verified on the output.
pub fn evolve_inhomogeneous(
    eig: &EigenSystem,
    u0: &TorusField,
    f: &SourceTerm,
    t_final: f64,
    steps: usize,
) -> Result<Trajectory> {
    if t_final <= 0.0 {
        return Err(Error::InvalidParameter(format!("nonpositive T = {t_final}")));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("steps = {steps} < 2")));
    }
    let dt = t_final / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut v = u0.clone();
    times.push(0.0);
    states.push(v.clone());
    let mut source_l1 = 0.0;
    for j in 0..steps {
        let t0 = j as f64 * dt;
        let t1 = t0 + dt;
        let mut next = evolve(eig, &v, dt);
        if !f.is_zero() {
            for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                let s = t0 + 0.5 * dt * (x + 1.0);
                let weight = 0.5 * dt * w;
                let fs = f.at(s);
                source_l1 += weight * fs.norm_l2();
                let propagated = evolve(eig, &fs, t1 - s);
                next = next.add(&propagated.scale(C64::new(0.0, -weight)));
            }
        }
        v = next;
        times.push(t1);
        states.push(v.clone());
    }
    let sup_l2 = states.iter().map(|s| s.norm_l2()).fold(0.0, f64::max);
    let bound = u0.norm_l2() + source_l1;
    if sup_l2 > bound + 1e-8 * bound.max(1.0) {
        return Err(Error::Numerical(format!(
            "L∞L² bound violated: sup ‖v‖ = {sup_l2:.6e} > ‖v₀‖ + ‖f‖_L¹L² = {bound:.6e}"
        )));
    }
    Ok(Trajectory { times, states, quad_order: 8, source_l1_l2: source_l1, sup_l2 })
}

/// Max deviation `max_{t,φ} ‖(e^{-itH_j} - e^{-itH})φ‖_{L²}` per sequence
/// element, against the limit pair `(θ, V)`.
pub fn propagator_stability(
    sequence: &[(BlochParameter, TorusField)],
    limit: (BlochParameter, &TorusField),
    probes: &[TorusField],
    t_grid: &[f64],
    mode: ExecMode,
) -> Result<Vec<f64>> {
    if probes.is_empty() {
        return Err(Error::EmptyInput("probe set".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::EmptyInput("time grid".into()));
    }
    let modes = probes[0].modes().clone();
    let op = assemble_operator(&modes, limit.0, limit.1)?;
    let eig_limit = eigendecompose(&op)?;
    let reference: Vec<Vec<TorusField>> = probes
        .iter()
        .map(|phi| t_grid.iter().map(|&t| evolve(&eig_limit, phi, t)).collect())
        .collect();
    let items: Vec<(BlochParameter, TorusField)> = sequence.to_vec();
    let deviations = exec::map_collect(mode, items, |(theta_j, v_j)| {
        let op_j = assemble_operator(&modes, theta_j, &v_j)?;
        let eig_j = eigendecompose(&op_j)?;
        let mut dev: f64 = 0.0;
        for (phi, refs) in probes.iter().zip(&reference) {
            for (&t, r) in t_grid.iter().zip(refs) {
                let u = evolve(&eig_j, phi, t);
                dev = dev.max(u.sub(r).norm_l2());
            }
        }
        Ok(dev)
    });
    deviations.into_iter().collect()
}

/// Which mixed norm a Strichartz ratio uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrichartzMode {
    /// `‖u‖_{L∞_x L²_t(0,T)}` on `T¹`.
    LinfL2OneD,
    /// `‖u‖_{L⁴_x L²_t(0,T)}` on `T²`.
    L4L2TwoD,
}

/// A mixed-norm ratio with its quadrature bookkeeping.
#[derive(Debug, Clone)]
pub struct StrichartzReport {
    pub ratio: f64,
    pub time_quad_points: usize,
    pub spatial_grid: usize,
}

/// Mixed-norm ratio `‖e^{-itH}v₀‖_mixed / ‖v₀‖_ℓ²` with the inner `L²` in
/// time at each spatial sample (composite Gauss-Legendre, ≥ 64 points) and
/// the outer norm over a ≥4× oversampled spatial grid (the sampled supremum
/// is a lower bound on the essential sup).
///
/// The denominator is the coefficient ℓ² norm `‖v₀‖_{L²}/(2π)^{d/2}`, so a
/// unit-coefficient constant on `T¹` gives exactly `√T`.
pub fn strichartz_ratio(
    eig: &EigenSystem,
    v0: &TorusField,
    t_final: f64,
    mode: StrichartzMode,
) -> Result<StrichartzReport> {
    let d = eig.modes().dim();
    match (d, mode) {
        (1, StrichartzMode::LinfL2OneD) | (2, StrichartzMode::L4L2TwoD) => {}
        _ => {
            return Err(Error::DimensionMismatch(format!(
                "mode {mode:?} does not match d = {d}"
            )))
        }
    }
    // Panel count scaled to the spectral width so the oscillatory integrand
    // is resolved; at least 8 panels × 8 nodes = 64 points.
    let spread = eig.values().last().unwrap_or(&0.0) - eig.values().first().unwrap_or(&0.0);
    let panels = ((spread * t_final / 4.0).ceil() as usize).clamp(8, 512);
    let m = field::grid_size(eig.modes(), 4);
    let dt = t_final / panels as f64;

    let grid_len = if d == 1 { m } else { m * m };
    let mut gsq = vec![0.0f64; grid_len];
    let a0 = eig.to_eigenbasis(v0);
    for p in 0..panels {
        let t0 = p as f64 * dt;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            let t = t0 + 0.5 * dt * (x + 1.0);
            let weight = 0.5 * dt * w;
            let mut a = a0.clone();
            for (k, &l) in eig.values().iter().enumerate() {
                a[k] *= C64::new(0.0, -t * l).exp();
            }
            let u = eig.from_eigenbasis(&a);
            for (g, v) in gsq.iter_mut().zip(u.grid_values(m)) {
                *g += weight * v.norm_sqr();
            }
        }
    }
    let mixed = match mode {
        StrichartzMode::LinfL2OneD => gsq.iter().fold(0.0f64, |acc, &g| acc.max(g)).sqrt(),
        StrichartzMode::L4L2TwoD => {
            let cell = (TAU / m as f64).powi(2);
            let int: f64 = gsq.iter().map(|&g| g * g).sum::<f64>() * cell;
            int.powf(0.25)
        }
    };
    let denom = v0.coeff_norm();
    if denom == 0.0 {
        return Err(Error::EmptyInput("zero initial state".into()));
    }
    Ok(StrichartzReport {
        ratio: mixed / denom,
        time_quad_points: panels * 8,
        spatial_grid: m,
    })
}

/// Convenience: eigensystem for `(θ, V)` on `modes`.
pub fn eigensystem_for(
    modes: &Arc<crate::modes::ModeSet>,
    theta: BlochParameter,
    v: &TorusField,
) -> Result<EigenSystem> {
    let op = assemble_operator(modes, theta, v)?;
    eigendecompose(&op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::catalog;
    use crate::modes::ModeSet;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup_1d(n: i64, theta: f64, with_v: bool) -> (Arc<ModeSet>, EigenSystem) {
        let modes = ModeSet::cube(1, n);
        let v = if with_v {
            catalog::cos_x(&modes)
        } else {
            TorusField::zero(modes.clone())
        };
        let eig = eigensystem_for(&modes, BlochParameter::one_d(theta).unwrap(), &v).unwrap();
        (modes, eig)
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let (modes, eig) = setup_1d(4, 0.3, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = TorusField::random(modes, &mut rng);
        let v = evolve(&eig, &u, 0.0);
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn free_evolution_is_a_phase() {
        let (modes, eig) = setup_1d(3, 0.4, false);
        let u = TorusField::plane_wave(modes, [2, 0]);
        let t = 0.7;
        let v = evolve(&eig, &u, t);
        let sym = (2.0 - 0.4) * (2.0 - 0.4);
        let expected = C64::new(0.0, -t * sym).exp();
        assert!((v.coeff([2, 0]) - expected).norm() < 1e-13);
    }

    #[test]
    fn unitarity_and_group_law_random() {
        let (modes, eig) = setup_1d(5, 0.21, true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let u = TorusField::random(modes.clone(), &mut rng);
            let t: f64 = rng.gen_range(-10.0..10.0);
            let s: f64 = rng.gen_range(-10.0..10.0);
            let vt = evolve(&eig, &u, t);
            assert!((vt.norm_l2() - u.norm_l2()).abs() < 1e-10 * u.norm_l2());
            let two_step = evolve(&eig, &vt, s);
            let one_step = evolve(&eig, &u, t + s);
            assert!(two_step.sub(&one_step).norm_l2() < 1e-9 * u.norm_l2());
        }
    }

    #[test]
    fn inner_products_preserved() {
        let (modes, eig) = setup_1d(4, 0.8, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = TorusField::random(modes.clone(), &mut rng);
        let w = TorusField::random(modes, &mut rng);
        let t = 2.3;
        let ip0 = u.inner_l2(&w);
        let ip1 = evolve(&eig, &u, t).inner_l2(&evolve(&eig, &w, t));
        assert!((ip0 - ip1).norm() < 1e-9 * ip0.norm().max(1.0));
    }

    #[test]
    fn zero_source_matches_homogeneous_exactly() {
        let (modes, eig) = setup_1d(4, 0.15, true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u0 = TorusField::random(modes, &mut rng);
        let traj = evolve_inhomogeneous(&eig, &u0, &SourceTerm::zero(), 1.5, 6).unwrap();
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let direct = evolve(&eig, &u0, *t);
            assert!(state.sub(&direct).norm_l2() < 1e-12 * u0.norm_l2());
        }
    }

    #[test]
    fn resonant_source_closed_form() {
        // f(t) = e^{-itλ₀}ψ₀, u₀ = 0 → u(T) = -iT e^{-iTλ₀} ψ₀
        let (_, eig) = setup_1d(4, 0.3, true);
        let psi0 = eig.eigenfunction(0);
        let l0 = eig.values()[0];
        let psi = psi0.clone();
        let f = SourceTerm::new(SourceRegularity::Continuous, move |t| {
            psi.scale(C64::new(0.0, -t * l0).exp())
        });
        let t_final = 1.3;
        let u0 = TorusField::zero(eig.modes().clone());
        let traj = evolve_inhomogeneous(&eig, &u0, &f, t_final, 16).unwrap();
        let end = traj.states.last().unwrap();
        let expected = psi0.scale(C64::new(0.0, -t_final * l0).exp() * C64::new(0.0, -t_final));
        assert!(end.sub(&expected).norm_l2() < 1e-9);
    }

    #[test]
    fn duhamel_step_doubling_converges() {
        let (modes, eig) = setup_1d(4, 0.6, true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0 = TorusField::random(modes.clone(), &mut rng);
        let g1 = TorusField::random(modes.clone(), &mut rng);
        let g2 = TorusField::random(modes, &mut rng);
        let f = SourceTerm::new(SourceRegularity::Continuous, move |t| {
            g1.scale(C64::new((1.3 * t).cos(), 0.0))
                .add(&g2.scale(C64::new(0.0, (0.7 * t).sin())))
        });
        let t_final = 1.0;
        let coarse = evolve_inhomogeneous(&eig, &u0, &f, t_final, 8).unwrap();
        let fine = evolve_inhomogeneous(&eig, &u0, &f, t_final, 16).unwrap();
        let d = coarse.states.last().unwrap().sub(fine.states.last().unwrap()).norm_l2();
        assert!(d < 1e-6, "endpoint moved by {d} under step doubling");
    }

    #[test]
    fn source_bound_holds() {
        let (modes, eig) = setup_1d(5, 0.45, true);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u0 = TorusField::random(modes.clone(), &mut rng);
        let g = TorusField::random(modes, &mut rng);
        let f = SourceTerm::new(SourceRegularity::Continuous, move |t| {
            g.scale(C64::new((2.0 * t).sin(), t.cos()))
        });
        let traj = evolve_inhomogeneous(&eig, &u0, &f, 2.0, 32).unwrap();
        assert!(traj.sup_l2 <= u0.norm_l2() + traj.source_l1_l2 + 1e-8);
    }

    #[test]
    fn rejects_bad_time_and_steps() {
        let (modes, eig) = setup_1d(2, 0.0, false);
        let u0 = TorusField::zero(modes);
        assert!(evolve_inhomogeneous(&eig, &u0, &SourceTerm::zero(), -1.0, 4).is_err());
        assert!(evolve_inhomogeneous(&eig, &u0, &SourceTerm::zero(), 1.0, 1).is_err());
    }

    #[test]
    fn stability_constant_sequence_is_flat() {
        let modes = ModeSet::cube(1, 4);
        let v = catalog::cos_x(&modes);
        let theta = BlochParameter::one_d(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probes: Vec<TorusField> =
            (0..3).map(|_| TorusField::random(modes.clone(), &mut rng)).collect();
        let seq: Vec<(BlochParameter, TorusField)> =
            (0..4).map(|_| (theta, v.clone())).collect();
        let devs =
            propagator_stability(&seq, (theta, &v), &probes, &[0.5, 1.0], ExecMode::Sequential)
                .unwrap();
        for d in devs {
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn stability_requires_probes() {
        let modes = ModeSet::cube(1, 2);
        let v = TorusField::zero(modes.clone());
        let theta = BlochParameter::one_d(0.0).unwrap();
        let err = propagator_stability(&[], (theta, &v), &[], &[1.0], ExecMode::Sequential);
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn stability_theta_perturbation_rate() {
        // θ_j = θ + 2^{-j}: deviation is O(|θ_j - θ|), so successive ratios
        // approach 2; assert ≥ 1.5 on the tail.
        let modes = ModeSet::cube(1, 4);
        let v = catalog::cos_x(&modes);
        let theta = BlochParameter::one_d(0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let probes: Vec<TorusField> =
            (0..3).map(|_| TorusField::random(modes.clone(), &mut rng)).collect();
        let seq: Vec<(BlochParameter, TorusField)> = (3..9)
            .map(|j| (BlochParameter::one_d(0.25 + 2f64.powi(-j)).unwrap(), v.clone()))
            .collect();
        let devs =
            propagator_stability(&seq, (theta, &v), &probes, &[0.7, 1.9], ExecMode::Sequential)
                .unwrap();
        for w in devs.windows(2).skip(2) {
            assert!(w[0] / w[1] >= 1.5, "ratio {} below 1.5", w[0] / w[1]);
        }
    }

    #[test]
    fn stability_mollified_potential_tends_to_zero() {
        let modes = ModeSet::cube(1, 6);
        let theta = BlochParameter::one_d(0.4).unwrap();
        let target = catalog::smoothed_interval_x(&modes, 0.5, 3.0, 1 << 14);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let probes: Vec<TorusField> =
            (0..2).map(|_| TorusField::random(modes.clone(), &mut rng)).collect();
        let seq: Vec<(BlochParameter, TorusField)> = (1..=8)
            .map(|j| (theta, catalog::smoothed_interval_x(&modes, 0.5, 3.0, 1 << j)))
            .collect();
        let devs =
            propagator_stability(&seq, (theta, &target), &probes, &[1.0], ExecMode::Sequential)
                .unwrap();
        assert!(
            devs.last().unwrap() < &(devs[0] / 10.0),
            "mollified deviations should fall 10×: {devs:?}"
        );
    }

    #[test]
    fn strichartz_constant_field_1d() {
        // unit-coefficient constant on T¹: ratio = √T
        let (modes, eig) = setup_1d(2, 0.0, false);
        let v0 = TorusField::constant(modes, C64::ONE);
        let t_final = 2.0;
        let rep = strichartz_ratio(&eig, &v0, t_final, StrichartzMode::LinfL2OneD).unwrap();
        assert_relative_eq!(rep.ratio, t_final.sqrt(), max_relative = 1e-10);
        assert!(rep.time_quad_points >= 64);
    }

    #[test]
    fn strichartz_mode_dimension_guard() {
        let (modes, eig) = setup_1d(2, 0.0, false);
        let v0 = TorusField::constant(modes, C64::ONE);
        assert!(strichartz_ratio(&eig, &v0, 1.0, StrichartzMode::L4L2TwoD).is_err());
    }

    #[test]
    fn strichartz_sphere_cluster_matches_dense_grid() {
        // d=2, V=0, θ=0, v0 = unit coefficients on |n|² = 25; the solution is
        // a pure phase so the dense-grid oracle is ‖v0‖_{L⁴}·√T / ‖v0‖_ℓ².
        let modes = ModeSet::cube(2, 6);
        let v = TorusField::zero(modes.clone());
        let eig = eigensystem_for(&modes, BlochParameter::two_d(0.0, 0.0).unwrap(), &v).unwrap();
        let mut v0 = TorusField::zero(modes.clone());
        for m in modes.modes() {
            if m[0] * m[0] + m[1] * m[1] == 25 {
                v0.set_coeff(*m, C64::ONE);
            }
        }
        let t_final = 1.0;
        let rep = strichartz_ratio(&eig, &v0, t_final, StrichartzMode::L4L2TwoD).unwrap();
        let m = 128usize;
        let vals = v0.grid_values(m);
        let cell = (TAU / m as f64).powi(2);
        let l4 = (vals.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * cell).powf(0.25);
        let oracle = l4 * t_final.sqrt() / v0.coeff_norm();
        assert_relative_eq!(rep.ratio, oracle, max_relative = 1e-6);
    }

    #[test]
    fn strichartz_ensemble_stability() {
        let (modes, eig) = setup_1d(6, 0.35, true);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut ratios: Vec<f64> = (0..40)
            .map(|_| {
                let v0 = TorusField::random(modes.clone(), &mut rng);
                strichartz_ratio(&eig, &v0, 1.0, StrichartzMode::LinfL2OneD).unwrap().ratio
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!(ratios.last().unwrap() <= &(10.0 * median));
    }
}
