use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::multi::{
    max_variable_index, parse_polynomial, rational_to_f64, CompiledPoly, MultiPolynomial, PolyJson,
};
use super::PolyError;
use crate::tensor::DenseTensor;

/// `f : R^m -> R^n`, one polynomial per output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorPolynomial {
    outputs: Vec<MultiPolynomial>,
}

/// JSON wire form: `{"outputs": [<polynomial>, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorPolyJson {
    pub outputs: Vec<PolyJson>,
}

impl VectorPolynomial {
    pub fn new(outputs: Vec<MultiPolynomial>) -> Result<Self, PolyError> {
        let Some(first) = outputs.first() else {
            return Err(PolyError::InvalidModel(
                "a vector polynomial needs at least one output".into(),
            ));
        };
        let m = first.num_vars();
        if m == 0 {
            return Err(PolyError::InvalidModel(
                "need at least one input variable".into(),
            ));
        }
        if let Some(p) = outputs.iter().find(|p| p.num_vars() != m) {
            return Err(PolyError::DimensionMismatch {
                expected: m,
                found: p.num_vars(),
            });
        }
        Ok(VectorPolynomial { outputs })
    }

    /// One polynomial per non-empty line. With `num_vars = None` the count
    /// is the largest variable index used anywhere.
    pub fn parse_lines(text: &str, num_vars: Option<usize>) -> Result<Self, PolyError> {
        let m = num_vars.unwrap_or_else(|| max_variable_index(text).max(1));
        let outputs = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| parse_polynomial(l, m))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(outputs)
    }

    pub fn outputs(&self) -> &[MultiPolynomial] {
        &self.outputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.outputs[0].num_vars()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.outputs.iter().map(|p| p.evaluate(x)).collect()
    }

    pub fn to_json(&self) -> VectorPolyJson {
        VectorPolyJson {
            outputs: self.outputs.iter().map(MultiPolynomial::to_json).collect(),
        }
    }

    pub fn from_json(json: &VectorPolyJson) -> Result<Self, PolyError> {
        Self::new(
            json.outputs
                .iter()
                .map(MultiPolynomial::from_json)
                .collect::<Result<_, _>>()?,
        )
    }

    /// Largest coefficient difference to `reference`, per output relative to
    /// the largest coefficient magnitude of that reference output (absolute
    /// for a zero output).
    pub fn max_relative_coefficient_error(
        &self,
        reference: &VectorPolynomial,
    ) -> Result<f64, PolyError> {
        if self.num_outputs() != reference.num_outputs() || self.num_vars() != reference.num_vars()
        {
            return Err(PolyError::DimensionMismatch {
                expected: reference.num_outputs() * reference.num_vars(),
                found: self.num_outputs() * self.num_vars(),
            });
        }
        let mut worst = 0.0f64;
        for (a, b) in self.outputs.iter().zip(&reference.outputs) {
            let scale = b
                .terms()
                .fold(0.0f64, |m, (_, c)| m.max(rational_to_f64(c).abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let diff = a - b;
            for (_, c) in diff.terms() {
                worst = worst.max(rational_to_f64(c).abs() / scale);
            }
        }
        Ok(worst)
    }

    /// `a·self + b·other`, exactly.
    pub fn linear_combination(
        &self,
        a: &num_rational::BigRational,
        other: &VectorPolynomial,
        b: &num_rational::BigRational,
    ) -> Result<Self, PolyError> {
        if self.num_outputs() != other.num_outputs() || self.num_vars() != other.num_vars() {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_outputs(),
                found: other.num_outputs(),
            });
        }
        Self::new(
            self.outputs
                .iter()
                .zip(&other.outputs)
                .map(|(p, q)| &p.scale(a) + &q.scale(b))
                .collect(),
        )
    }

    pub fn evaluator(&self) -> DerivativeEvaluator {
        DerivativeEvaluator::new(self)
    }
}

/// Precompiled values, first and second partials of a vector polynomial.
///
/// Only the `j <= k` second partials are compiled; the Hessian is filled by
/// mirroring, so it is symmetric bit for bit.
#[derive(Clone, Debug)]
pub struct DerivativeEvaluator {
    n: usize,
    m: usize,
    values: Vec<CompiledPoly>,
    first: Vec<CompiledPoly>,
    second: Vec<CompiledPoly>,
}

impl DerivativeEvaluator {
    pub fn new(f: &VectorPolynomial) -> Self {
        let (n, m) = (f.num_outputs(), f.num_vars());
        let mut values = Vec::with_capacity(n);
        let mut first = Vec::with_capacity(n * m);
        let mut second = Vec::with_capacity(n * m * (m + 1) / 2);
        for p in &f.outputs {
            values.push(p.compile());
            let partials: Vec<MultiPolynomial> = (0..m)
                .map(|j| p.differentiate(j).expect("index within range"))
                .collect();
            for (j, dj) in partials.iter().enumerate() {
                first.push(dj.compile());
                for k in j..m {
                    second.push(dj.differentiate(k).expect("index within range").compile());
                }
            }
        }
        DerivativeEvaluator {
            n,
            m,
            values,
            first,
            second,
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.n
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    fn check(&self, x: &[f64]) -> Result<(), PolyError> {
        if x.len() != self.m {
            Err(PolyError::DimensionMismatch {
                expected: self.m,
                found: x.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.check(x)?;
        Ok(self
            .values
            .iter()
            .map(|p| p.evaluate_unchecked(x))
            .collect())
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        self.check(x)?;
        Ok(DMatrix::from_fn(self.n, self.m, |i, j| {
            self.first[i * self.m + j].evaluate_unchecked(x)
        }))
    }

    /// Row-major `n × m × m` second partials written into `out`.
    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), PolyError> {
        self.check(x)?;
        let m = self.m;
        assert_eq!(out.len(), self.n * m * m);
        let per_output = m * (m + 1) / 2;
        for i in 0..self.n {
            let mut c = i * per_output;
            for j in 0..m {
                for k in j..m {
                    let v = self.second[c].evaluate_unchecked(x);
                    c += 1;
                    out[(i * m + j) * m + k] = v;
                    out[(i * m + k) * m + j] = v;
                }
            }
        }
        Ok(())
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DenseTensor, PolyError> {
        let mut data = vec![0.0; self.n * self.m * self.m];
        self.hessian_into(x, &mut data)?;
        Ok(DenseTensor::new(vec![self.n, self.m, self.m], data).expect("consistent dims"))
    }
}

/// `J[i][j] = ∂f_i/∂x_j` at `x`.
pub fn jacobian_at(f: &VectorPolynomial, x: &[f64]) -> Result<DMatrix<f64>, PolyError> {
    f.evaluator().jacobian(x)
}

/// `H[i][j][k] = ∂²f_i/∂x_j∂x_k` at `x` as an `n × m × m` tensor.
pub fn hessian_at(f: &VectorPolynomial, x: &[f64]) -> Result<DenseTensor, PolyError> {
    f.evaluator().hessian(x)
}

/// Central finite-difference estimates of the Jacobian and Hessian built
/// from function values only.
pub fn fd_check(
    f: &VectorPolynomial,
    x: &[f64],
    h: f64,
) -> Result<(DMatrix<f64>, DenseTensor), PolyError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(PolyError::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let (n, m) = (f.num_outputs(), f.num_vars());
    if x.len() != m {
        return Err(PolyError::DimensionMismatch {
            expected: m,
            found: x.len(),
        });
    }
    let eval = f.evaluator();
    let at = |dj: Option<(usize, f64)>, dk: Option<(usize, f64)>| {
        let mut y = x.to_vec();
        for (idx, s) in [dj, dk].into_iter().flatten() {
            y[idx] += s;
        }
        eval.value(&y).expect("dimension checked")
    };

    let mut jac = DMatrix::zeros(n, m);
    for j in 0..m {
        let plus = at(Some((j, h)), None);
        let minus = at(Some((j, -h)), None);
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }

    let mut hess = DenseTensor::zeros(vec![n, m, m]).expect("positive dims");
    for j in 0..m {
        for k in j..m {
            let pp = at(Some((j, h)), Some((k, h)));
            let pm = at(Some((j, h)), Some((k, -h)));
            let mp = at(Some((j, -h)), Some((k, h)));
            let mm = at(Some((j, -h)), Some((k, -h)));
            for i in 0..n {
                let v = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h);
                hess.set(&[i, j, k], v);
                hess.set(&[i, k, j], v);
            }
        }
    }
    Ok((jac, hess))
}
