//! End-to-end decoupling: sample points, evaluate `f`, `J` and `H`, build
//! the derivative tensors, decompose them, recover the univariate branches
//! and validate the recovered model on fresh points.

mod dataset;
mod pipeline;
mod reconstruct;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyfunc::PolyError;
use crate::tensor::TensorError;

pub use dataset::{build_dataset, DerivativeDataset};
pub use pipeline::{
    decouple, decouple_first_order, decouple_joint, decouple_second_order, validate_model,
    DecoupleConfig, DecoupleReport, Seeds, SolverDiagnostics, TensorResiduals, RECOVERY_THRESHOLD,
    SOLVER_SEED_OFFSET, VALIDATION_SEED_OFFSET,
};
pub use reconstruct::{reconstruct_g, BranchFit};
pub use sampling::{sample_points, SamplingConfig};

/// Which derivative tensors drive the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// CPD of the Jacobian tensor only.
    Jacobian,
    /// Partially symmetric CPD of the Hessian tensor only.
    Hessian,
    /// Both tensors with shared `W` and `V`.
    Joint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Jacobian => "jacobian",
            Method::Hessian => "hessian",
            Method::Joint => "joint",
        })
    }
}

impl FromStr for Method {
    type Err = DecoupleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jacobian" => Ok(Method::Jacobian),
            "hessian" => Ok(Method::Hessian),
            "joint" => Ok(Method::Joint),
            other => Err(DecoupleError::InvalidConfig(format!(
                "unknown method '{other}' (expected jacobian, hessian or joint)"
            ))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoupleError {
    #[error(transparent)]
    Poly(#[from] PolyError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ill-conditioned branch fit: {0}")]
    IllConditioned(String),
}
