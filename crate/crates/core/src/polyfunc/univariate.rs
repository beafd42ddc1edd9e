use serde::{Deserialize, Serialize};

/// Dense univariate polynomial, `coeffs[k]` multiplies `z^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "UnivariateJson", into = "UnivariateJson")]
pub struct UnivariatePolynomial {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct UnivariateJson {
    coeffs: Vec<f64>,
}

impl From<UnivariateJson> for UnivariatePolynomial {
    fn from(j: UnivariateJson) -> Self {
        UnivariatePolynomial::new(j.coeffs)
    }
}

impl From<UnivariatePolynomial> for UnivariateJson {
    fn from(p: UnivariatePolynomial) -> Self {
        UnivariateJson { coeffs: p.coeffs }
    }
}

impl UnivariatePolynomial {
    /// Trailing zeros are trimmed; an empty or all-zero input gives `[0]`.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UnivariatePolynomial { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    /// `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        if self.is_zero() {
            -1
        } else {
            self.coeffs.len() as i64 - 1
        }
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// `g(s * z)`: coefficient `k` picks up `s^k`.
    pub fn rescale_argument(&self, s: f64) -> Self {
        let mut pow = 1.0;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow);
            pow *= s;
        }
        Self::new(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}
