use nalgebra::DMatrix;

/// Minimum-norm least-squares solution of `a · x = b` via SVD.
///
/// Singular values below `1e-13 · σ_max · max(rows, cols)` are treated as zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "lstsq: row count mismatch");
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(a.ncols(), b.ncols());
    }
    let eps = 1e-13 * smax * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, eps).expect("U and V were computed")
}

/// Solves `x · g = m` for symmetric positive (semi)definite `g`.
///
/// Returns the solution and whether a ridge of `1e-12·trace(g)` was added.
pub(crate) fn solve_gram_right(m: &DMatrix<f64>, g: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if let Some(ch) = g.clone().cholesky() {
        let x = ch.solve(&m.transpose()).transpose();
        if x.iter().all(|v| v.is_finite()) {
            return (x, false);
        }
    }
    let ridge = 1e-12 * g.trace().max(f64::MIN_POSITIVE);
    let mut gr = g.clone();
    for i in 0..gr.nrows() {
        gr[(i, i)] += ridge;
    }
    let x = match gr.clone().cholesky() {
        Some(ch) => ch.solve(&m.transpose()).transpose(),
        None => lstsq(&gr, &m.transpose()).transpose(),
    };
    (x, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_exact_and_min_norm() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = DMatrix::from_column_slice(2, 1, &[2.0, -3.0]);
        let sol = lstsq(&a, &(&a * &x));
        assert!((sol - x).norm() < 1e-14);

        // rank-deficient: both columns equal, min-norm splits evenly
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[2.0, 2.0]);
        let sol = lstsq(&a, &b);
        assert!((sol[0] - 1.0).abs() < 1e-14 && (sol[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gram_solve_flags_singular() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let m = DMatrix::from_row_slice(1, 2, &[4.0, 9.0]);
        let (x, reg) = solve_gram_right(&m, &g);
        assert!(!reg);
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);

        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (x, reg) = solve_gram_right(&m, &g);
        assert!(reg);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
