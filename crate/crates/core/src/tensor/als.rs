//! CP decomposition by alternating least squares.
//!
//! Each sweep solves, for every mode `n` in turn,
//! `A_n = X_(n) · KR(others) · (∗_{j≠n} A_jᵀA_j)⁻¹`, which can only lower the
//! squared residual. The reported cost is the absolute `‖T − [[A…]]‖_F²`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{better, CpdConfig, CpdResult};
use super::dense::{khatri_rao, DenseTensor};
use super::factors::{reconstruct, FactorSet};
use super::linalg::solve_gram_right;
use super::TensorError;

/// Relative squared residual treated as zero.
pub(crate) const NUMERICAL_ZERO: f64 = 1e-30;
/// Relative squared residual (a relative residual of 1e-13) at which a
/// restart counts as an exact fit and no further restarts are tried.
pub(crate) const EXACT_FIT: f64 = 1e-26;

pub fn cpd_als(t: &DenseTensor, cfg: &CpdConfig) -> Result<CpdResult<FactorSet>, TensorError> {
    cfg.validate()?;
    if t.has_non_finite() {
        return Err(TensorError::NonFinite);
    }
    let dims = t.dims().to_vec();
    let total: usize = dims.iter().product();
    for (mode, &d) in dims.iter().enumerate() {
        if cfg.rank > total / d {
            return Err(TensorError::InvalidConfig(format!(
                "rank {} exceeds the {} columns of the mode-{} unfolding",
                cfg.rank,
                total / d,
                mode + 1
            )));
        }
    }
    if t.is_zero() {
        let zeros = dims.iter().map(|&d| DMatrix::zeros(d, cfg.rank)).collect();
        return Ok(CpdResult {
            factors: FactorSet::untagged(zeros)?,
            final_cost: 0.0,
            cost_trace: vec![0.0],
            converged: true,
            restart_index: 0,
            iterations: 0,
            regularized: false,
            gradient_norm: None,
        });
    }

    let unfolded: Vec<DMatrix<f64>> = (0..dims.len())
        .map(|mode| t.unfold(mode))
        .collect::<Result<_, _>>()?;
    let mut best: Option<CpdResult<FactorSet>> = None;
    for restart in 0..cfg.restarts {
        let init = random_factors(&dims, cfg.rank, cfg.seed.wrapping_add(restart as u64));
        let mut run = als_run(t, &unfolded, init, cfg.max_iters, cfg.tol)?;
        run.restart_index = restart;
        let exact = run.final_cost <= EXACT_FIT * t.frobenius_norm().powi(2);
        if best
            .as_ref()
            .is_none_or(|b| better(run.final_cost, b.final_cost))
        {
            best = Some(run);
        }
        if exact {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

pub(crate) fn random_factors(dims: &[usize], rank: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter()
        .map(|&d| DMatrix::from_fn(d, rank, |_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

/// One ALS run from the given initial factors.
pub(crate) fn als_run(
    t: &DenseTensor,
    unfolded: &[DMatrix<f64>],
    mut factors: Vec<DMatrix<f64>>,
    max_iters: usize,
    tol: f64,
) -> Result<CpdResult<FactorSet>, TensorError> {
    let order = factors.len();
    let norm2 = t.frobenius_norm().powi(2);
    let cost_of = |f: &[DMatrix<f64>]| -> Result<f64, TensorError> {
        let fs = FactorSet::untagged(f.to_vec())?;
        Ok(reconstruct(&fs, t.dims())?.distance(t).powi(2))
    };
    let mut trace = vec![cost_of(&factors)?];
    let mut regularized = false;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        for mode in 0..order {
            let mut kr: Option<DMatrix<f64>> = None;
            let mut gram = DMatrix::from_element(factors[0].ncols(), factors[0].ncols(), 1.0);
            for (j, a) in factors.iter().enumerate() {
                if j == mode {
                    continue;
                }
                kr = Some(match kr {
                    None => a.clone(),
                    Some(acc) => khatri_rao(a, &acc)?,
                });
                gram.component_mul_assign(&a.tr_mul(a));
            }
            let mttkrp = &unfolded[mode] * kr.expect("order >= 2");
            let (next, reg) = solve_gram_right(&mttkrp, &gram);
            regularized |= reg;
            factors[mode] = next;
        }
        let cost = cost_of(&factors)?;
        let prev = *trace.last().expect("non-empty");
        trace.push(cost);
        // an exact fit stops improving once it hits the rounding floor
        let floor = cost <= EXACT_FIT * norm2 && cost >= prev;
        if cost <= NUMERICAL_ZERO * norm2 || floor || (prev - cost).abs() <= tol * prev {
            converged = true;
            break;
        }
    }
    let final_cost = *trace.last().expect("non-empty");
    Ok(CpdResult {
        factors: FactorSet::untagged(factors)?,
        final_cost,
        cost_trace: trace,
        converged,
        restart_index: 0,
        iterations,
        regularized,
        gradient_norm: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_from(factors: &[DMatrix<f64>]) -> DenseTensor {
        let fs = FactorSet::untagged(factors.to_vec()).unwrap();
        reconstruct(&fs, &fs.dims()).unwrap()
    }

    #[test]
    fn exact_rank_one() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let b = DMatrix::from_column_slice(2, 1, &[-1.0, 0.5]);
        let c = DMatrix::from_column_slice(2, 1, &[3.0, 1.0]);
        let mut t = tensor_from(&[a, b, c]);
        let norm = t.frobenius_norm();
        t.data_mut().iter_mut().for_each(|x| *x /= norm);
        let res = cpd_als(&t, &CpdConfig::with_rank(1)).unwrap();
        assert!(res.final_cost <= 1e-20, "cost {}", res.final_cost);
        assert!(res.converged);
    }

    #[test]
    fn cost_trace_is_monotone_and_deterministic() {
        let dims = [3, 4, 5];
        let truth = random_factors(&dims, 2, 7);
        let mut t = tensor_from(&truth);
        // perturb so the fit is not exact
        for (k, x) in t.data_mut().iter_mut().enumerate() {
            *x += 0.01 * ((k as f64) * 0.37).sin();
        }
        let mut cfg = CpdConfig::with_rank(2);
        cfg.restarts = 3;
        cfg.max_iters = 300;
        let res = cpd_als(&t, &cfg).unwrap();
        let c0 = res.cost_trace[0];
        for w in res.cost_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14 * c0);
        }
        assert_eq!(res.final_cost, *res.cost_trace.last().unwrap());
        let again = cpd_als(&t, &cfg).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn zero_tensor_gives_zero_factors() {
        let t = DenseTensor::zeros(vec![2, 2, 3]).unwrap();
        let res = cpd_als(&t, &CpdConfig::with_rank(2)).unwrap();
        assert!(res.converged);
        assert_eq!(res.final_cost, 0.0);
        assert!(res
            .factors
            .factors()
            .iter()
            .all(|f| f.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn rejects_nan_and_oversized_rank() {
        let mut t = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        t.data_mut()[3] = f64::NAN;
        assert_eq!(
            cpd_als(&t, &CpdConfig::with_rank(1)),
            Err(TensorError::NonFinite)
        );
        let t = DenseTensor::new(vec![1, 2, 2], vec![1.0; 4]).unwrap();
        assert!(cpd_als(&t, &CpdConfig::with_rank(3)).is_err());
    }

    #[test]
    fn recovers_generic_rank_two_factors() {
        let dims = [4, 3, 6];
        let truth = random_factors(&dims, 2, 11);
        let t = tensor_from(&truth);
        let mut cfg = CpdConfig::with_rank(2);
        cfg.restarts = 3;
        let res = cpd_als(&t, &cfg).unwrap();
        assert!(res.final_cost.sqrt() / t.frobenius_norm() < 1e-10);
        for (mode, t) in truth.iter().enumerate() {
            let m = super::super::factor_match(t, res.factors.factor(mode)).unwrap();
            assert!(m.score > 0.999999);
        }
    }
}
