use serde::{Deserialize, Serialize};

use super::TensorError;

/// Solver settings shared by [`cpd_als`](super::cpd_als) and
/// [`joint_cpd`](super::joint_cpd).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpdConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// ALS: relative cost change threshold. Joint solver: gradient threshold
    /// `‖∇‖ ≤ tol·(1 + cost)`.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Weight of the Jacobian term; `None` means `1/‖J‖²`.
    pub alpha1: Option<f64>,
    /// Weight of the Hessian term; `None` means `1/‖H‖²`.
    pub alpha2: Option<f64>,
}

impl Default for CpdConfig {
    fn default() -> Self {
        CpdConfig {
            rank: 1,
            max_iters: 2000,
            tol: 1e-12,
            restarts: 10,
            seed: 42,
            alpha1: None,
            alpha2: None,
        }
    }
}

impl CpdConfig {
    pub fn with_rank(rank: usize) -> Self {
        CpdConfig {
            rank,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        if self.rank == 0 {
            return Err(TensorError::InvalidConfig("rank must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(TensorError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.restarts == 0 {
            return Err(TensorError::InvalidConfig(
                "restarts must be at least 1".into(),
            ));
        }
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if let Some(a) = a {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(TensorError::InvalidConfig(format!(
                        "{name} must be a finite non-negative weight, got {a}"
                    )));
                }
            }
        }
        if self.alpha1 == Some(0.0) && self.alpha2 == Some(0.0) {
            return Err(TensorError::InvalidConfig(
                "alpha1 and alpha2 are both zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpdResult<F> {
    pub factors: F,
    pub final_cost: f64,
    /// Cost after every accepted iteration; the first entry is the cost of
    /// the initial point.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    pub restart_index: usize,
    pub iterations: usize,
    /// Set when ridge regularization was needed for a singular normal equation.
    pub regularized: bool,
    /// Final gradient norm (joint solver only).
    pub gradient_norm: Option<f64>,
}

/// Restart tie-break: strictly lower cost wins, costs within `1e-14`
/// relative keep the earlier restart.
pub(crate) fn better(candidate: f64, incumbent: f64) -> bool {
    if candidate.is_nan() {
        return false;
    }
    if incumbent.is_nan() {
        return true;
    }
    let scale = candidate.abs().max(incumbent.abs());
    candidate < incumbent && incumbent - candidate > 1e-14 * scale
}
