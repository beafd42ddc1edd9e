//! Recovery of the univariate branches from the sample factors.
//!
//! With `z = v_iᵀx` rescaled to `t = z/s` (`s = max|z|`) each branch is
//! written `g_i = Σ a_j t^j`. The derivative coefficients `a_1…a_d` come
//! from the `G′` and/or `G″` columns; whatever the derivatives cannot pin
//! (`a_0`, plus `a_1` when only `G″` is used) is solved jointly over all
//! branches from the function values `F ≈ W g(Vᵀx)`, which also refine the
//! remaining coefficients.

use nalgebra::DMatrix;

use super::dataset::DerivativeDataset;
use super::{DecoupleError, Method};
use crate::polyfunc::UnivariatePolynomial;
use crate::tensor::{lstsq, JointFactors};

/// Relative singular-value floor below which a derivative fit is refused.
const CONDITION_LIMIT: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchFit {
    pub g: Vec<UnivariatePolynomial>,
    /// Coefficient of determination of the `G″` column fit per branch
    /// (`G′` for the Jacobian method).
    pub r2: Vec<f64>,
}

pub fn reconstruct_g(
    factors: &JointFactors,
    ds: &DerivativeDataset,
    degree: usize,
    method: Method,
) -> Result<BranchFit, DecoupleError> {
    let (samples, rank) = (ds.num_samples(), factors.rank());
    if degree == 0 {
        return Err(DecoupleError::InvalidConfig(
            "degree must be at least 1".into(),
        ));
    }
    if samples < degree + 1 {
        return Err(DecoupleError::InvalidConfig(format!(
            "{samples} samples cannot determine a degree-{degree} polynomial; need at least {}",
            degree + 1
        )));
    }
    if factors.v.nrows() != ds.num_inputs()
        || factors.w.nrows() != ds.num_outputs()
        || factors.g1.nrows() != samples
    {
        return Err(DecoupleError::InvalidConfig(
            "factors do not match the dataset".into(),
        ));
    }

    let z = &ds.x * &factors.v;
    let scales: Vec<f64> = (0..rank)
        .map(|i| {
            let s = z.column(i).amax();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let t = DMatrix::from_fn(samples, rank, |k, i| z[(k, i)] / scales[i]);

    let use_g1 = matches!(method, Method::Jacobian | Method::Joint);
    let use_g2 = matches!(method, Method::Hessian | Method::Joint);
    // lowest coefficient index determined by the derivative data
    let first = if use_g1 { 1 } else { 2 };

    let mut coeffs = vec![vec![0.0; degree + 1]; rank];
    let mut r2 = vec![f64::NAN; rank];
    for i in 0..rank {
        let s = scales[i];
        let ti = t.column(i);
        let unknowns = (degree + 1).saturating_sub(first);
        let d1 = |k: usize, j: usize| j as f64 * ti[k].powi(j as i32 - 1) / s;
        let d2 = |k: usize, j: usize| (j * (j - 1)) as f64 * ti[k].powi(j as i32 - 2) / (s * s);
        if unknowns > 0 {
            let g1 = factors.g1.column(i);
            let g2 = factors.g2.column(i);
            // one scale for both blocks, with G″ measured in units of G′ so a
            // vanishing block does not dominate the other
            let n1 = if use_g1 { g1.norm() } else { 0.0 };
            let n2 = if use_g2 { g2.norm() * s } else { 0.0 };
            let w1 = inverse_norm(n1.max(n2));
            let w2 = w1 * s;
            let rows = samples * (use_g1 as usize + use_g2 as usize);
            let mut a = DMatrix::zeros(rows, unknowns);
            let mut b = DMatrix::zeros(rows, 1);
            let mut row = 0;
            if use_g1 {
                for k in 0..samples {
                    for c in 0..unknowns {
                        a[(row, c)] = w1 * d1(k, first + c);
                    }
                    b[(row, 0)] = w1 * g1[k];
                    row += 1;
                }
            }
            if use_g2 {
                for k in 0..samples {
                    for c in 0..unknowns {
                        let j = first + c;
                        a[(row, c)] = if j >= 2 { w2 * d2(k, j) } else { 0.0 };
                    }
                    b[(row, 0)] = w2 * g2[k];
                    row += 1;
                }
            }
            check_conditioning(&a, i)?;
            let sol = lstsq(&a, &b);
            for c in 0..unknowns {
                coeffs[i][first + c] = sol[(c, 0)];
            }
        }
        // goodness of fit of the second-derivative column (first for jacobian)
        let (target, pred): (Vec<f64>, Vec<f64>) = if use_g2 {
            (0..samples)
                .map(|k| {
                    let p: f64 = (2..=degree).map(|j| coeffs[i][j] * d2(k, j)).sum();
                    (factors.g2[(k, i)], p)
                })
                .unzip()
        } else {
            (0..samples)
                .map(|k| {
                    let p: f64 = (1..=degree).map(|j| coeffs[i][j] * d1(k, j)).sum();
                    (factors.g1[(k, i)], p)
                })
                .unzip()
        };
        r2[i] = r_squared(&target, &pred);
    }

    // Function values: the coefficients the derivatives left open (a_0, and
    // a_1 without G′) start at zero, then every coefficient receives the
    // minimum-norm correction that best reproduces F. Directions F cannot
    // see (such as constants of branches sharing an output) keep their
    // derivative-based values.
    let (n, per) = (ds.num_outputs(), degree + 1);
    let mut a = DMatrix::zeros(n * samples, rank * per);
    let mut b = DMatrix::zeros(n * samples, 1);
    for p in 0..n {
        for k in 0..samples {
            let row = p * samples + k;
            let mut model = 0.0;
            for i in 0..rank {
                let w = factors.w[(p, i)];
                let mut power = 1.0;
                for j in 0..per {
                    a[(row, i * per + j)] = w * power;
                    model += w * coeffs[i][j] * power;
                    power *= t[(k, i)];
                }
            }
            b[(row, 0)] = ds.f[(p, k)] - model;
        }
    }
    let correction = lstsq(&a, &b);
    for i in 0..rank {
        for j in 0..per {
            coeffs[i][j] += correction[(i * per + j, 0)];
        }
    }

    let g = coeffs
        .into_iter()
        .zip(&scales)
        .map(|(a, &s)| {
            let c = a
                .iter()
                .enumerate()
                .map(|(j, &aj)| aj / s.powi(j as i32))
                .collect();
            UnivariatePolynomial::new(c)
        })
        .collect();
    Ok(BranchFit { g, r2 })
}

fn inverse_norm(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        1.0
    }
}

fn check_conditioning(a: &DMatrix<f64>, branch: usize) -> Result<(), DecoupleError> {
    let sv = a.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    if max.is_nan() || max <= 0.0 || min < CONDITION_LIMIT * max {
        return Err(DecoupleError::IllConditioned(format!(
            "the samples of branch {} do not determine its polynomial (collinear or repeated \
             values of z); use more or better spread sample points, or a lower degree",
            branch + 1
        )));
    }
    Ok(())
}

/// `1 − SS_res/SS_tot`; falls back to the uncentered total when the target
/// is constant, and is 1 for an exactly fitted zero column.
fn r_squared(target: &[f64], pred: &[f64]) -> f64 {
    let len = target.len() as f64;
    let mean = target.iter().sum::<f64>() / len;
    let ss_res: f64 = target.iter().zip(pred).map(|(y, p)| (y - p).powi(2)).sum();
    let ss_raw: f64 = target.iter().map(|y| y * y).sum();
    let ss_tot: f64 = target.iter().map(|y| (y - mean).powi(2)).sum();
    let total = if ss_tot > 1e-24 * ss_raw {
        ss_tot
    } else {
        ss_raw
    };
    if total == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / total
    }
}
