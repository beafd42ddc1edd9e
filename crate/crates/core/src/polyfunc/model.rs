use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::multi::{rational_from_f64, MultiPolynomial};
use super::univariate::UnivariatePolynomial;
use super::vector::VectorPolynomial;
use super::PolyError;
use crate::tensor::DenseTensor;

/// `f(x) = W g(Vᵀx)` with `W: n×r`, `V: m×r` and `r` univariate branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelJson", try_from = "ModelJson")]
pub struct DecoupledModel {
    w: DMatrix<f64>,
    v: DMatrix<f64>,
    g: Vec<UnivariatePolynomial>,
}

/// JSON wire form; `W` and `V` are lists of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub g: Vec<UnivariatePolynomial>,
}

impl DecoupledModel {
    pub fn new(
        w: DMatrix<f64>,
        v: DMatrix<f64>,
        g: Vec<UnivariatePolynomial>,
    ) -> Result<Self, PolyError> {
        let r = g.len();
        if r == 0 {
            return Err(PolyError::InvalidModel(
                "model needs at least one branch".into(),
            ));
        }
        if w.ncols() != r || v.ncols() != r {
            return Err(PolyError::InvalidModel(format!(
                "W has {} columns and V has {} columns but there are {r} branches",
                w.ncols(),
                v.ncols()
            )));
        }
        if w.nrows() == 0 || v.nrows() == 0 {
            return Err(PolyError::InvalidModel(
                "W and V need at least one row".into(),
            ));
        }
        let finite = w.iter().chain(v.iter()).all(|x| x.is_finite())
            && g.iter().all(|gi| gi.coeffs().iter().all(|c| c.is_finite()));
        if !finite {
            return Err(PolyError::InvalidModel(
                "model contains non-finite values".into(),
            ));
        }
        Ok(DecoupledModel { w, v, g })
    }

    /// Convenience constructor from row slices and ascending coefficients.
    pub fn from_rows(w: &[&[f64]], v: &[&[f64]], g: &[&[f64]]) -> Result<Self, PolyError> {
        let to_matrix = |rows: &[&[f64]], name: &str| -> Result<DMatrix<f64>, PolyError> {
            let cols = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != cols) {
                return Err(PolyError::InvalidModel(format!("ragged rows in {name}")));
            }
            Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
        };
        Self::new(
            to_matrix(w, "W")?,
            to_matrix(v, "V")?,
            g.iter()
                .map(|c| UnivariatePolynomial::new(c.to_vec()))
                .collect(),
        )
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn g(&self) -> &[UnivariatePolynomial] {
        &self.g
    }

    pub fn num_outputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.v.nrows()
    }

    pub fn num_branches(&self) -> usize {
        self.g.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<DVector<f64>, PolyError> {
        if x.len() != self.num_inputs() {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_inputs(),
                found: x.len(),
            });
        }
        Ok(self.v.tr_mul(&DVector::from_column_slice(x)))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        let z = self.check_input(x)?;
        let gz = DVector::from_iterator(
            self.num_branches(),
            self.g.iter().zip(z.iter()).map(|(gi, &zi)| gi.evaluate(zi)),
        );
        Ok((&self.w * gz).iter().copied().collect())
    }

    /// Chain-rule Jacobian `W diag(g_i'(v_iᵀx)) Vᵀ`.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        let z = self.check_input(x)?;
        let d = DVector::from_iterator(
            self.num_branches(),
            self.g
                .iter()
                .zip(z.iter())
                .map(|(gi, &zi)| gi.derivative().evaluate(zi)),
        );
        Ok(&self.w * DMatrix::from_diagonal(&d) * self.v.transpose())
    }

    /// `Σ_r W[i,r] g_r''(z_r) V[j,r] V[k,r]` as an `n × m × m` tensor.
    pub fn hessian_at(&self, x: &[f64]) -> Result<DenseTensor, PolyError> {
        let z = self.check_input(x)?;
        let (n, m) = (self.num_outputs(), self.num_inputs());
        let dd: Vec<f64> = self
            .g
            .iter()
            .zip(z.iter())
            .map(|(gi, &zi)| gi.derivative().derivative().evaluate(zi))
            .collect();
        let mut h = DenseTensor::zeros(vec![n, m, m]).expect("positive dims");
        for i in 0..n {
            for j in 0..m {
                for k in 0..m {
                    let s: f64 = (0..self.num_branches())
                        .map(|r| self.w[(i, r)] * dd[r] * self.v[(j, r)] * self.v[(k, r)])
                        .sum();
                    h.set(&[i, j, k], s);
                }
            }
        }
        Ok(h)
    }

    /// Exact coupled form, computed in rational arithmetic.
    pub fn expand(&self) -> Result<VectorPolynomial, PolyError> {
        expand_decoupled(self)
    }

    /// Canonical form: unit-norm `V` columns with positive leading entry,
    /// scales absorbed into the branches.
    pub fn normalize(&self) -> Result<DecoupledModel, PolyError> {
        normalize_model(self)
    }

    pub fn to_json(&self) -> ModelJson {
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        ModelJson {
            w: rows(&self.w),
            v: rows(&self.v),
            g: self.g.clone(),
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self, PolyError> {
        let w: Vec<&[f64]> = json.w.iter().map(Vec::as_slice).collect();
        let v: Vec<&[f64]> = json.v.iter().map(Vec::as_slice).collect();
        let g: Vec<&[f64]> = json.g.iter().map(UnivariatePolynomial::coeffs).collect();
        Self::from_rows(&w, &v, &g)
    }
}

impl From<DecoupledModel> for ModelJson {
    fn from(m: DecoupledModel) -> Self {
        m.to_json()
    }
}

impl TryFrom<ModelJson> for DecoupledModel {
    type Error = PolyError;

    fn try_from(json: ModelJson) -> Result<Self, PolyError> {
        DecoupledModel::from_json(&json)
    }
}

/// Substitutes `z_i = v_iᵀx` into each `g_i`, mixes with `W`, and collects
/// terms exactly.
pub fn expand_decoupled(model: &DecoupledModel) -> Result<VectorPolynomial, PolyError> {
    let (n, m, r) = (
        model.num_outputs(),
        model.num_inputs(),
        model.num_branches(),
    );
    let mut branches = Vec::with_capacity(r);
    for i in 0..r {
        let mut z = MultiPolynomial::zero(m);
        for j in 0..m {
            let x = MultiPolynomial::variable(m, j)?;
            z = &z + &x.scale(&rational_from_f64(model.v[(j, i)])?);
        }
        let mut power = MultiPolynomial::constant(m, num_traits::One::one());
        let mut gi = MultiPolynomial::zero(m);
        for &c in model.g[i].coeffs() {
            gi = &gi + &power.scale(&rational_from_f64(c)?);
            power = &power * &z;
        }
        branches.push(gi);
    }
    let mut outputs = Vec::with_capacity(n);
    for p in 0..n {
        let mut fp = MultiPolynomial::zero(m);
        for (i, gi) in branches.iter().enumerate() {
            fp = &fp + &gi.scale(&rational_from_f64(model.w[(p, i)])?);
        }
        outputs.push(fp);
    }
    VectorPolynomial::new(outputs)
}

pub fn normalize_model(model: &DecoupledModel) -> Result<DecoupledModel, PolyError> {
    let mut v = model.v.clone();
    let mut g = model.g.clone();
    for (i, gi) in g.iter_mut().enumerate() {
        let col = v.column(i);
        let norm = col.norm();
        let Some(lead) = col.iter().copied().find(|&x| x != 0.0) else {
            return Err(PolyError::InvalidModel(format!("column {i} of V is zero")));
        };
        if lead > 0.0 && (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            continue;
        }
        let s = norm.copysign(lead);
        v.column_mut(i).scale_mut(1.0 / s);
        // z_old = s * z_new
        *gi = gi.rescale_argument(s);
    }
    DecoupledModel::new(model.w.clone(), v, g)
}
