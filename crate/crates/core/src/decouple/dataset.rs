use nalgebra::DMatrix;

use super::DecoupleError;
use crate::polyfunc::{PolyError, VectorPolynomial};
use crate::tensor::DenseTensor;

/// Function values and derivatives of `f` at the sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeDataset {
    /// `N × m` sample points, one per row.
    pub x: DMatrix<f64>,
    /// `n × N` function values.
    pub f: DMatrix<f64>,
    /// `n × m × N` Jacobians stacked along the last mode.
    pub j: DenseTensor,
    /// `n × m × m × N` Hessians stacked along the last mode.
    pub h: DenseTensor,
}

impl DerivativeDataset {
    pub fn num_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.f.nrows()
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.x.row(k).iter().copied().collect()
    }
}

pub fn build_dataset(
    f: &VectorPolynomial,
    x: &DMatrix<f64>,
) -> Result<DerivativeDataset, DecoupleError> {
    let (n, m, samples) = (f.num_outputs(), f.num_vars(), x.nrows());
    if x.ncols() != m {
        return Err(PolyError::DimensionMismatch {
            expected: m,
            found: x.ncols(),
        }
        .into());
    }
    if samples == 0 {
        return Err(DecoupleError::InvalidConfig(
            "need at least one sample point".into(),
        ));
    }
    let eval = f.evaluator();
    let mut fv = DMatrix::zeros(n, samples);
    let mut jd = vec![0.0; n * m * samples];
    let mut hd = vec![0.0; n * m * m * samples];
    let mut hk = vec![0.0; n * m * m];
    for k in 0..samples {
        let point: Vec<f64> = x.row(k).iter().copied().collect();
        for (p, v) in eval.value(&point)?.into_iter().enumerate() {
            fv[(p, k)] = v;
        }
        let jac = eval.jacobian(&point)?;
        for p in 0..n {
            for q in 0..m {
                jd[(p * m + q) * samples + k] = jac[(p, q)];
            }
        }
        eval.hessian_into(&point, &mut hk)?;
        for (idx, &v) in hk.iter().enumerate() {
            hd[idx * samples + k] = v;
        }
    }
    Ok(DerivativeDataset {
        x: x.clone(),
        f: fv,
        j: DenseTensor::new(vec![n, m, samples], jd)?,
        h: DenseTensor::new(vec![n, m, m, samples], hd)?,
    })
}
