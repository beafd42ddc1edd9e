//! Exact multivariate polynomial algebra: parsing, printing, evaluation,
//! symbolic differentiation, and expansion of decoupled models into their
//! coupled form.
//!
//! Coefficients are exact rationals; conversion to `f64` happens only when
//! a polynomial is evaluated or serialized.

mod model;
mod multi;
mod univariate;
mod vector;

use thiserror::Error;

pub use model::{expand_decoupled, normalize_model, DecoupledModel, ModelJson};
pub use multi::{
    max_variable_index, parse_polynomial, rational_from_f64, rational_to_f64, CompiledPoly,
    Exponent, MultiPolynomial, PolyJson, TermJson,
};
pub use univariate::UnivariatePolynomial;
pub use vector::{
    fd_check, hessian_at, jacobian_at, DerivativeEvaluator, VectorPolyJson, VectorPolynomial,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("variable x{index} is out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
}
