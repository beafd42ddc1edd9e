//! Decoupling multivariate polynomial vector functions `f(x) = W g(Vᵀx)`
//! from sampled first and second derivative information.

pub mod decouple;
pub mod instances;
pub mod json;
pub mod polyfunc;
pub mod tensor;
