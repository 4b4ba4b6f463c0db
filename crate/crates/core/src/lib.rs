//! Spectral toolkit for the Bloch-shifted Schrödinger operator family
//! `H_{θ,V} = -Δ + 2iθ·∇ + |θ|² + V` on the torus `T^d` (`d ∈ {1,2}`).
//!
//! The crate provides, on truncated Fourier bases:
//!
//! * [`spectral`] — fields on `T^d`, operator assembly, eigendecomposition,
//!   functional calculus, resolvents and exact `L²`/`L⁴` norms;
//! * [`propagator`] — the unitary group `e^{-itH}`, Duhamel solutions with
//!   sources, parameter-stability tables and mixed-norm (Strichartz) ratios;
//! * [`floquet`] — the discrete Floquet-Bloch transform on `K`-cell periodic
//!   truncations of the plane and the identities lifting torus observability;
//! * [`observability`] — observability Gramians, HUM controls, frequency
//!   cutoffs, dyadic partitions and the unique-continuation probe;
//! * [`inequalities`] — lattice-point clusters, sector decompositions, `L⁴`
//!   inequality harnesses, resolvent-norm estimation and gap-failure witnesses;
//! * [`semiclassical`] — torus Weyl quantization, Wigner pairings, normal-form
//!   operators and rational-direction changes of variables.
//!
//! All quantities use the Fourier convention `u = Σ û(n) e^{in·x}` with
//! `‖u‖²_{L²} = (2π)^d Σ |û(n)|²`, fixed crate-wide.
//!
//! Parameter sweeps run data-parallel through [rayon] when the default
//! `parallel` feature is enabled; disabling it yields a sequential fallback
//! with identical (bitwise) results.

pub mod error;
pub mod exec;
pub mod field;
pub mod floquet;
pub mod inequalities;
pub mod linalg;
pub mod modes;
pub mod observability;
pub mod propagator;
pub mod semiclassical;
pub mod spectral;

pub use error::Error;
pub use exec::ExecMode;
pub use field::TorusField;
pub use modes::ModeSet;
pub use spectral::{BlochOperator, BlochParameter, EigenSystem};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// The slice `[0, 2π)^d` circumference constant.
pub const TAU: f64 = std::f64::consts::TAU;
