//! Dense tensors and canonical polyadic decompositions.
//!
//! [`cpd_als`] is the classic unconstrained alternating least squares
//! solver; [`joint_cpd`] fits a Jacobian tensor `[[W, V, G']]` and a Hessian
//! tensor `[[W, V, V, G'']]` together, with `W` and `V` shared and `V`
//! occupying both symmetric Hessian modes.

mod als;
mod config;
mod dense;
mod factors;
mod joint;
mod linalg;
mod matching;

use thiserror::Error;

pub use als::cpd_als;
pub use config::{CpdConfig, CpdResult};
pub use dense::{khatri_rao, DenseTensor};
pub use factors::{fit_last_factor, normalize_factors, reconstruct, FactorSet, JointFactors};
pub use joint::{joint_cost, joint_cost_gradient, joint_cpd, joint_refine, JointWeights};
pub use linalg::lstsq;
pub use matching::{factor_match, FactorMatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("Hessian tensor is not symmetric in its input modes (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("column {column} of factor {factor} is zero")]
    ZeroColumn { factor: String, column: usize },
}
