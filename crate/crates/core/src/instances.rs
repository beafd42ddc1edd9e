//! Ground-truth decoupled models used by the reproduction runs and tests.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::polyfunc::{DecoupledModel, UnivariatePolynomial};

/// Single output, two branches: `f(x) = g1(x1 + 3x2) + g2(2x1 + 4x2)` with
/// `g1 = 3z³ − z + 5` and `g2 = −5z³ + 3z − 7`.
pub fn waring_model() -> DecoupledModel {
    DecoupledModel::from_rows(
        &[&[1.0, 1.0]],
        &[&[1.0, 2.0], &[3.0, 4.0]],
        &[&[5.0, -1.0, 0.0, 3.0], &[-7.0, 3.0, 0.0, -5.0]],
    )
    .expect("valid model")
}

/// Two inputs, two outputs, three cubic branches.
pub fn three_branch_model() -> DecoupledModel {
    DecoupledModel::from_rows(
        &[&[1.0, 0.0, 1.0], &[-2.0, -1.0, 1.0]],
        &[&[2.0, 1.0, 0.0], &[1.0, 0.0, 3.0]],
        &[
            &[5.0, 0.0, -1.0, 3.0],
            &[-7.0, 3.0, 0.0, -5.0],
            &[2.0, -2.0, 0.0, 3.0],
        ],
    )
    .expect("valid model")
}

/// Two inputs, two outputs, four cubic branches (more branches than
/// inputs or outputs).
pub fn four_branch_model() -> DecoupledModel {
    DecoupledModel::from_rows(
        &[&[1.0, 0.0, 1.0, 2.0], &[-2.0, -1.0, 1.0, 3.0]],
        &[&[2.0, 1.0, 0.0, 1.0], &[1.0, 0.0, 3.0, -1.0]],
        &[
            &[5.0, 0.0, -1.0, 3.0],
            &[-7.0, 3.0, 0.0, -5.0],
            &[2.0, -2.0, 0.0, 3.0],
            &[1.0, 0.0, -2.0, 1.0],
        ],
    )
    .expect("valid model")
}

/// Model with i.i.d. standard normal `W`, `V` and branch coefficients of
/// degree `degree`.
pub fn random_model(n: usize, m: usize, r: usize, degree: usize, seed: u64) -> DecoupledModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let w = DMatrix::from_fn(n, r, |_, _| normal());
    let v = DMatrix::from_fn(m, r, |_, _| normal());
    let g = (0..r)
        .map(|_| UnivariatePolynomial::new((0..=degree).map(|_| normal()).collect()))
        .collect();
    DecoupledModel::new(w, v, g).expect("finite entries")
}
