//! Dense N-way arrays stored row-major (first index slowest), together with
//! the matricization and Khatri-Rao helpers used by the CPD solvers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TensorError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorJson")]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct TensorJson {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<TensorJson> for DenseTensor {
    type Error = TensorError;
    fn try_from(j: TensorJson) -> Result<Self, Self::Error> {
        DenseTensor::new(j.dims, j.data)
    }
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(TensorError::DimensionMismatch(format!(
                "tensor dims must be non-empty and positive, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(TensorError::DimensionMismatch(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self, TensorError> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|x| !x.is_finite())
    }

    /// `‖self − other‖_F`; panics on shape mismatch.
    pub fn distance(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.dims, other.dims, "tensor shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Decodes a flat row-major offset into a multi-index.
    pub fn unravel(&self, mut flat: usize, index: &mut [usize]) {
        for (slot, &d) in index.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
    }

    /// Mode-`mode` matricization (zero-based mode). Columns cycle the
    /// remaining modes with the lowest-numbered one varying fastest.
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<f64>, TensorError> {
        self.check_mode(mode)?;
        let rows = self.dims[mode];
        let cols = self.len() / rows;
        let strides = unfold_strides(&self.dims, mode);
        let mut out = DMatrix::zeros(rows, cols);
        let mut idx = vec![0; self.order()];
        for (flat, &v) in self.data.iter().enumerate() {
            self.unravel(flat, &mut idx);
            let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            out[(idx[mode], col)] = v;
        }
        Ok(out)
    }

    /// Inverse of [`unfold`](Self::unfold).
    pub fn fold(matrix: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Result<Self, TensorError> {
        let mut t = Self::zeros(dims.to_vec())?;
        t.check_mode(mode)?;
        let rows = dims[mode];
        if matrix.nrows() != rows || matrix.ncols() * rows != t.len() {
            return Err(TensorError::DimensionMismatch(format!(
                "cannot fold a {}x{} matrix into {dims:?} along mode {mode}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let strides = unfold_strides(dims, mode);
        let mut idx = vec![0; dims.len()];
        for flat in 0..t.len() {
            t.unravel(flat, &mut idx);
            let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            t.data[flat] = matrix[(idx[mode], col)];
        }
        Ok(t)
    }

    fn check_mode(&self, mode: usize) -> Result<(), TensorError> {
        if mode >= self.order() {
            Err(TensorError::ModeOutOfRange {
                mode,
                order: self.order(),
            })
        } else {
            Ok(())
        }
    }
}

// column strides of the unfolding; the unfolded mode itself gets stride 0
fn unfold_strides(dims: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0; dims.len()];
    let mut s = 1;
    for (k, &d) in dims.iter().enumerate() {
        if k != mode {
            strides[k] = s;
            s *= d;
        }
    }
    strides
}

/// Columnwise Kronecker product: column `r` is `a_r ⊗ b_r`, so the row
/// index of `b` varies fastest.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, TensorError> {
    if a.ncols() != b.ncols() {
        return Err(TensorError::DimensionMismatch(format!(
            "khatri_rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (p, q) = (a.nrows(), b.nrows());
    Ok(DMatrix::from_fn(p * q, a.ncols(), |row, r| {
        a[(row / q, r)] * b[(row % q, r)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sequential(dims: Vec<usize>) -> DenseTensor {
        let len = dims.iter().product();
        DenseTensor::new(dims, (0..len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn row_major_layout() {
        let t = sequential(vec![2, 3, 4]);
        assert_eq!(t.get(&[1, 2, 3]), 23.0);
        assert_eq!(t.get(&[0, 1, 0]), 4.0);
        let mut idx = [0; 3];
        t.unravel(17, &mut idx);
        assert_eq!(idx, [1, 1, 1]);
    }

    #[test]
    fn unfold_matrix_mode_one_is_identity() {
        let t = sequential(vec![2, 2]);
        let m = t.unfold(0).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]));
    }

    #[test]
    fn unfold_mode_two_matches_index_oracle() {
        let t = sequential(vec![2, 3, 4]);
        let m = t.unfold(1).unwrap();
        assert_eq!(m.shape(), (3, 8));
        // oracle: entry (i, j, k) goes to row j, column i + 2k
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(m[(j, i + 2 * k)], (i * 12 + j * 4 + k) as f64);
                }
            }
        }
        assert!(t.unfold(3).is_err());
    }

    #[test]
    fn fold_inverts_unfold() {
        let t = sequential(vec![3, 2, 2, 5]);
        for mode in 0..4 {
            let back = DenseTensor::fold(&t.unfold(mode).unwrap(), mode, t.dims()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn khatri_rao_small_cases() {
        let ones = DMatrix::from_element(2, 1, 1.0);
        assert_eq!(
            khatri_rao(&ones, &ones).unwrap(),
            DMatrix::from_element(4, 1, 1.0)
        );
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let b = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        assert_eq!(
            khatri_rao(&a, &b).unwrap(),
            DMatrix::from_column_slice(4, 1, &[3.0, 4.0, 6.0, 8.0])
        );
        assert!(khatri_rao(&a, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn khatri_rao_matches_nested_loops() {
        let a = DMatrix::from_fn(3, 2, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let b = DMatrix::from_fn(4, 2, |i, j| (i * i) as f64 - j as f64 * 0.3);
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.shape(), (12, 2));
        for r in 0..2 {
            for i in 0..3 {
                for j in 0..4 {
                    assert_eq!(kr[(i * 4 + j, r)], a[(i, r)] * b[(j, r)]);
                }
            }
        }
    }

    #[test]
    fn json_round_trip_validates() {
        let t = sequential(vec![2, 2]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"dims":[2,2],"data":[0.0,1.0,2.0,3.0]}"#);
        let back: DenseTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<DenseTensor>(r#"{"dims":[2],"data":[1.0]}"#).is_err());
    }
}
