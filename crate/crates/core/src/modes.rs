//! Truncated Fourier index sets on `T^d`.

use crate::{Error, Result};
use std::collections::HashMap;
use std::sync::Arc;

/// A frequency vector. For `d = 1` the second component is always `0`.
pub type Mode = [i64; 2];

/// An ordered, duplicate-free set of integer frequencies `n ∈ Z^d`,
/// symmetric under `n ↦ -n` and sorted lexicographically.
///
/// The standard constructor is the cube `‖n‖_∞ ≤ N`; custom symmetric lists
/// are allowed for sparse work (e.g. isolated mode pairs).
#[derive(Debug, Clone)]
pub struct ModeSet {
    dim: usize,
    cutoff: Option<i64>,
    modes: Vec<Mode>,
    index: HashMap<Mode, usize>,
}

impl PartialEq for ModeSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.modes == other.modes
    }
}
impl Eq for ModeSet {}

impl ModeSet {
    /// Cube `‖n‖_∞ ≤ n_max` in dimension `d ∈ {1,2}`, lexicographic order.
    pub fn cube(dim: usize, n_max: i64) -> Arc<Self> {
        assert!(dim == 1 || dim == 2, "only d = 1, 2 are supported");
        assert!(n_max >= 0);
        let mut modes = Vec::new();
        match dim {
            1 => {
                for n in -n_max..=n_max {
                    modes.push([n, 0]);
                }
            }
            _ => {
                for n1 in -n_max..=n_max {
                    for n2 in -n_max..=n_max {
                        modes.push([n1, n2]);
                    }
                }
            }
        }
        let index = modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        Arc::new(Self { dim, cutoff: Some(n_max), modes, index })
    }

    /// Custom symmetric mode list. Deduplicates and sorts; fails if the list
    /// is not closed under negation.
    pub fn from_modes(dim: usize, mut modes: Vec<Mode>) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::DimensionMismatch(format!("d = {dim}")));
        }
        if dim == 1 && modes.iter().any(|m| m[1] != 0) {
            return Err(Error::DimensionMismatch(
                "1-d mode with nonzero second component".into(),
            ));
        }
        modes.sort_unstable();
        modes.dedup();
        let index: HashMap<Mode, usize> =
            modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        for m in &modes {
            let neg = [-m[0], -m[1]];
            if !index.contains_key(&neg) {
                return Err(Error::ModeSetMismatch(format!(
                    "set not symmetric under negation: {m:?} present, {neg:?} missing"
                )));
            }
        }
        Ok(Arc::new(Self { dim, cutoff: None, modes, index }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cutoff `N` for cube sets, `None` for custom lists.
    pub fn cutoff(&self) -> Option<i64> {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn index_of(&self, m: Mode) -> Option<usize> {
        self.index.get(&m).copied()
    }

    pub fn contains(&self, m: Mode) -> bool {
        self.index.contains_key(&m)
    }

    /// `|n - θ|²` for the mode at `idx`.
    pub fn shifted_norm_sq(&self, idx: usize, theta: &[f64; 2]) -> f64 {
        let m = self.modes[idx];
        let d1 = m[0] as f64 - theta[0];
        if self.dim == 1 {
            d1 * d1
        } else {
            let d2 = m[1] as f64 - theta[1];
            d1 * d1 + d2 * d2
        }
    }

    /// Largest `‖n‖_∞` over the set.
    pub fn max_abs(&self) -> i64 {
        self.modes
            .iter()
            .map(|m| m[0].abs().max(m[1].abs()))
            .max()
            .unwrap_or(0)
    }
}
