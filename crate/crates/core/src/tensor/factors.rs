//! Factor matrices of a CPD and their canonical scaling/ordering.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use super::dense::{khatri_rao, DenseTensor};
use super::linalg::lstsq;
use super::TensorError;

/// One factor matrix per tensor mode. Modes carrying the same tag hold the
/// same matrix (for example `V` in both input modes of a Hessian tensor).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSet {
    factors: Vec<DMatrix<f64>>,
    tags: Vec<String>,
}

impl FactorSet {
    pub fn new(factors: Vec<DMatrix<f64>>, tags: Vec<String>) -> Result<Self, TensorError> {
        if factors.is_empty() || factors.len() != tags.len() {
            return Err(TensorError::DimensionMismatch(format!(
                "{} factors with {} tags",
                factors.len(),
                tags.len()
            )));
        }
        let rank = factors[0].ncols();
        if factors.iter().any(|f| f.ncols() != rank) {
            return Err(TensorError::DimensionMismatch(
                "factor matrices have different column counts".into(),
            ));
        }
        for i in 0..tags.len() {
            for j in 0..i {
                if tags[i] == tags[j] && factors[i] != factors[j] {
                    return Err(TensorError::DimensionMismatch(format!(
                        "modes {j} and {i} share tag {:?} but hold different matrices",
                        tags[i]
                    )));
                }
            }
        }
        Ok(FactorSet { factors, tags })
    }

    /// Tags `mode1`, `mode2`, ... so that no factors are shared.
    pub fn untagged(factors: Vec<DMatrix<f64>>) -> Result<Self, TensorError> {
        let tags = (1..=factors.len()).map(|k| format!("mode{k}")).collect();
        Self::new(factors, tags)
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn by_tag(&self, tag: &str) -> Option<&DMatrix<f64>> {
        self.tags
            .iter()
            .position(|t| t == tag)
            .map(|i| &self.factors[i])
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn into_factors(self) -> Vec<DMatrix<f64>> {
        self.factors
    }

    /// Mode groups sharing a tag, in order of first appearance.
    fn tag_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (mode, tag) in self.tags.iter().enumerate() {
            match groups.iter_mut().find(|g| &self.tags[g[0]] == tag) {
                Some(g) => g.push(mode),
                None => groups.push(vec![mode]),
            }
        }
        groups
    }
}

/// `Σ_r a_r ∘ b_r ∘ c_r ∘ …` evaluated entrywise.
///
/// Values coming from modes with a shared tag are multiplied in sorted
/// order, so entries that differ only by a permutation of those modes are
/// bitwise equal.
pub fn reconstruct(fs: &FactorSet, dims: &[usize]) -> Result<DenseTensor, TensorError> {
    if fs.dims() != dims {
        return Err(TensorError::DimensionMismatch(format!(
            "factor row counts {:?} do not match tensor dims {dims:?}",
            fs.dims()
        )));
    }
    let mut t = DenseTensor::zeros(dims.to_vec())?;
    let groups = fs.tag_groups();
    let mut idx = vec![0; dims.len()];
    let mut vals = Vec::with_capacity(dims.len());
    for flat in 0..t.len() {
        t.unravel(flat, &mut idx);
        let mut sum = 0.0;
        for r in 0..fs.rank() {
            let mut prod = 1.0;
            for g in &groups {
                if g.len() == 1 {
                    prod *= fs.factors[g[0]][(idx[g[0]], r)];
                } else {
                    vals.clear();
                    vals.extend(g.iter().map(|&mode| fs.factors[mode][(idx[mode], r)]));
                    vals.sort_by(f64::total_cmp);
                    prod *= vals.iter().product::<f64>();
                }
            }
            sum += prod;
        }
        t.data_mut()[flat] = sum;
    }
    Ok(t)
}

/// Least-squares factor of the last mode given all other factors, i.e. the
/// `G` minimizing `‖t − [[A_1, …, A_{d−1}, G]]‖`.
pub fn fit_last_factor(
    t: &DenseTensor,
    others: &[&DMatrix<f64>],
) -> Result<DMatrix<f64>, TensorError> {
    let dims = t.dims();
    if others.len() + 1 != dims.len() {
        return Err(TensorError::DimensionMismatch(format!(
            "{} fixed factors for a tensor of order {}",
            others.len(),
            dims.len()
        )));
    }
    for (mode, a) in others.iter().enumerate() {
        if a.nrows() != dims[mode] || a.ncols() != others[0].ncols() {
            return Err(TensorError::DimensionMismatch(format!(
                "factor {} is {}x{}, expected {} rows and {} columns",
                mode + 1,
                a.nrows(),
                a.ncols(),
                dims[mode],
                others[0].ncols()
            )));
        }
    }
    // row-major data: the last mode is the column index, earlier modes
    // vary slower the lower they are, matching KR(A_1, KR(A_2, …))
    let mut design = others[others.len() - 1].clone();
    for a in others[..others.len() - 1].iter().rev() {
        design = khatri_rao(a, &design)?;
    }
    let samples = dims[dims.len() - 1];
    let data = DMatrix::from_row_slice(t.len() / samples, samples, t.data());
    Ok(lstsq(&design, &data).transpose())
}

/// Factors of the joint Jacobian/Hessian model: `J ≈ [[W, V, G1]]` and
/// `H ≈ [[W, V, V, G2]]`. `G1` and `G2` have one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct JointFactors {
    pub w: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

impl JointFactors {
    pub fn zeros(n: usize, m: usize, samples: usize, rank: usize) -> Self {
        JointFactors {
            w: DMatrix::zeros(n, rank),
            v: DMatrix::zeros(m, rank),
            g1: DMatrix::zeros(samples, rank),
            g2: DMatrix::zeros(samples, rank),
        }
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn jacobian_factors(&self) -> FactorSet {
        FactorSet {
            factors: vec![self.w.clone(), self.v.clone(), self.g1.clone()],
            tags: vec!["W".into(), "V".into(), "G1".into()],
        }
    }

    pub fn hessian_factors(&self) -> FactorSet {
        FactorSet {
            factors: vec![
                self.w.clone(),
                self.v.clone(),
                self.v.clone(),
                self.g2.clone(),
            ],
            tags: vec!["W".into(), "V".into(), "V".into(), "G2".into()],
        }
    }

    /// Canonical form: `W` and `V` columns unit-norm with positive leading
    /// entry; a `V` scale `s` multiplies `G1` by `s` and `G2` by `s²`, a `W`
    /// scale multiplies both. Columns are then sorted by `V` (then `W`)
    /// lexicographically.
    pub fn normalized(&self) -> Result<JointFactors, TensorError> {
        let sw = column_scales(&self.w, "W")?;
        let sv = column_scales(&self.v, "V")?;
        let mut out = self.clone();
        for r in 0..self.rank() {
            if sw[r] != 1.0 {
                out.w.column_mut(r).scale_mut(1.0 / sw[r]);
            }
            if sv[r] != 1.0 {
                out.v.column_mut(r).scale_mut(1.0 / sv[r]);
            }
            if sw[r] != 1.0 || sv[r] != 1.0 {
                out.g1.column_mut(r).scale_mut(sw[r] * sv[r]);
                out.g2.column_mut(r).scale_mut(sw[r] * sv[r] * sv[r]);
            }
        }
        let perm = sort_columns(&[&out.w], &[&out.v, &out.w]);
        Ok(JointFactors {
            w: permute_columns(&out.w, &perm),
            v: permute_columns(&out.v, &perm),
            g1: permute_columns(&out.g1, &perm),
            g2: permute_columns(&out.g2, &perm),
        })
    }
}

/// Scales every non-final factor to unit-norm columns with positive leading
/// entries and pushes the scales into the final factor (raised to the
/// number of modes sharing each tag). Columns are sorted by descending norm
/// of the first factor, ties broken by the remaining factors' columns in
/// lexicographic order.
pub fn normalize_factors(fs: &FactorSet) -> Result<FactorSet, TensorError> {
    let last = fs.order() - 1;
    if fs.tags[..last].contains(&fs.tags[last]) {
        return Err(TensorError::InvalidConfig(
            "the final factor must not share its tag with another mode".into(),
        ));
    }
    let groups = fs.tag_groups();
    let mut factors = fs.factors.clone();
    let rank = fs.rank();
    for g in groups.iter().filter(|g| g[0] != last) {
        let scales = column_scales(&factors[g[0]], &fs.tags[g[0]])?;
        for (r, &s) in scales.iter().enumerate().take(rank) {
            if s == 1.0 {
                continue;
            }
            for &mode in g {
                factors[mode].column_mut(r).scale_mut(1.0 / s);
            }
            factors[last]
                .column_mut(r)
                .scale_mut(s.powi(g.len() as i32));
        }
    }

    // key: first factor by descending norm, then the other non-final
    // factors (first appearance order), then the first factor itself
    let firsts: Vec<&DMatrix<f64>> = vec![&factors[0]];
    let mut rest: Vec<&DMatrix<f64>> = groups
        .iter()
        .map(|g| g[0])
        .filter(|&mode| mode != 0 && mode != last)
        .map(|mode| &factors[mode])
        .collect();
    if last != 0 {
        rest.push(&factors[0]);
    }
    let perm = sort_columns(&firsts, &rest);
    let factors = factors.iter().map(|f| permute_columns(f, &perm)).collect();
    Ok(FactorSet {
        factors,
        tags: fs.tags.clone(),
    })
}

/// Signed scale per column that makes it unit-norm with a positive leading
/// entry; exactly `1.0` for columns already in that form.
fn column_scales(m: &DMatrix<f64>, name: &str) -> Result<Vec<f64>, TensorError> {
    (0..m.ncols())
        .map(|r| {
            let col = m.column(r);
            let Some(lead) = col.iter().copied().find(|&x| x != 0.0) else {
                return Err(TensorError::ZeroColumn {
                    factor: name.to_string(),
                    column: r,
                });
            };
            let norm = col.norm();
            if lead > 0.0 && (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
                Ok(1.0)
            } else {
                Ok(norm.copysign(lead))
            }
        })
        .collect()
}

fn sort_columns(by_norm: &[&DMatrix<f64>], lex: &[&DMatrix<f64>]) -> Vec<usize> {
    let rank = by_norm[0].ncols();
    let mut perm: Vec<usize> = (0..rank).collect();
    perm.sort_by(|&a, &b| {
        for m in by_norm {
            let o = m.column(b).norm().total_cmp(&m.column(a).norm());
            if o != Ordering::Equal {
                return o;
            }
        }
        for m in lex {
            for (x, y) in m.column(a).iter().zip(m.column(b).iter()) {
                let o = x.total_cmp(y);
                if o != Ordering::Equal {
                    return o;
                }
            }
        }
        Ordering::Equal
    });
    perm
}

fn permute_columns(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, perm[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: &DenseTensor, b: &DenseTensor) -> f64 {
        a.distance(b) / b.frobenius_norm()
    }

    #[test]
    fn rank_one_outer_product() {
        let fs = FactorSet::untagged(vec![
            DMatrix::from_column_slice(2, 1, &[1.0, 2.0]),
            DMatrix::from_column_slice(2, 1, &[3.0, 4.0]),
        ])
        .unwrap();
        let t = reconstruct(&fs, &[2, 2]).unwrap();
        assert_eq!(t.data(), &[3.0, 4.0, 6.0, 8.0]);
        assert!(reconstruct(&fs, &[2, 3]).is_err());
    }

    #[test]
    fn zero_factors_give_zero_tensor() {
        let fs = FactorSet::untagged(vec![DMatrix::zeros(2, 3), DMatrix::zeros(4, 3)]).unwrap();
        assert!(reconstruct(&fs, &[2, 4]).unwrap().is_zero());
    }

    #[test]
    fn shared_tags_must_agree() {
        let a = DMatrix::from_element(2, 1, 1.0);
        let b = DMatrix::from_element(2, 1, 2.0);
        assert!(FactorSet::new(vec![a.clone(), b], vec!["V".into(), "V".into()]).is_err());
        assert!(FactorSet::new(vec![a.clone(), a.clone()], vec!["V".into(), "V".into()]).is_ok());
        assert!(FactorSet::new(
            vec![a.clone(), DMatrix::zeros(2, 2)],
            vec!["A".into(), "B".into()]
        )
        .is_err());
    }

    #[test]
    fn unfold_identity_for_three_way() {
        let a = DMatrix::from_fn(2, 2, |i, j| 1.0 + i as f64 - 2.0 * j as f64);
        let b = DMatrix::from_fn(3, 2, |i, j| (i as f64 - 1.0) * (j as f64 + 0.5));
        let c = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.25 - 1.0);
        let fs = FactorSet::untagged(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let t = reconstruct(&fs, &[2, 3, 4]).unwrap();
        let lhs = t.unfold(0).unwrap();
        let rhs = &a * super::super::khatri_rao(&c, &b).unwrap().transpose();
        assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn hessian_reconstruction_is_exactly_symmetric() {
        let w = DMatrix::from_fn(2, 3, |i, j| 0.3 * i as f64 - 0.7 * j as f64 + 0.1);
        let v = DMatrix::from_fn(3, 3, |i, j| ((i * 3 + j) as f64 * 1.37).sin());
        let g = DMatrix::from_fn(5, 3, |i, j| ((i + j) as f64 * 0.91).cos());
        let jf = JointFactors {
            w: w.clone(),
            v,
            g1: g.clone(),
            g2: g,
        };
        let h = reconstruct(&jf.hessian_factors(), &[2, 3, 3, 5]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..5 {
                        assert_eq!(
                            h.get(&[i, j, k, l]).to_bits(),
                            h.get(&[i, k, j, l]).to_bits()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn normalizing_a_flipped_column() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.6, -0.3, 0.8, 1.1]);
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut b_scaled = b.clone();
        b_scaled.column_mut(1).scale_mut(-2.0);
        let fs = FactorSet::untagged(vec![a, b_scaled, c]).unwrap();
        let before = reconstruct(&fs, &[2, 2, 3]).unwrap();
        let canon = normalize_factors(&fs).unwrap();
        let after = reconstruct(&canon, &[2, 2, 3]).unwrap();
        assert!(rel(&after, &before) <= 1e-12);
        for f in &canon.factors()[..2] {
            for r in 0..2 {
                assert!((f.column(r).norm() - 1.0).abs() < 1e-15);
                assert!(f.column(r).iter().find(|&&x| x != 0.0).unwrap() > &0.0);
            }
        }
    }

    #[test]
    fn canonical_input_is_unchanged_bitwise() {
        let fs = FactorSet::untagged(vec![
            DMatrix::from_row_slice(2, 2, &[0.6, 1.0, 0.8, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.0, 0.8]),
            DMatrix::from_row_slice(2, 2, &[3.0, -2.0, 1.0, 7.0]),
        ])
        .unwrap();
        let once = normalize_factors(&fs).unwrap();
        let twice = normalize_factors(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(normalize_factors(&twice).unwrap(), twice);
    }

    #[test]
    fn zero_column_is_reported() {
        let fs = FactorSet::untagged(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(
            normalize_factors(&fs),
            Err(TensorError::ZeroColumn {
                factor: "mode1".into(),
                column: 1
            })
        );
    }

    #[test]
    fn shared_tag_scale_enters_squared() {
        let v = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let fs = FactorSet::new(
            vec![v.clone(), v, DMatrix::from_row_slice(2, 1, &[1.0, -1.0])],
            vec!["V".into(), "V".into(), "G".into()],
        )
        .unwrap();
        let canon = normalize_factors(&fs).unwrap();
        assert_eq!(canon.factor(2).as_slice(), &[25.0, -25.0]);
        assert_eq!(canon.factor(0), canon.factor(1));
    }

    #[test]
    fn joint_normalization_is_consistent() {
        let jf = JointFactors {
            w: DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.0, 3.0]),
            v: DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 1.0, 2.0]),
            g1: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            g2: DMatrix::from_row_slice(3, 2, &[-1.0, 0.5, 0.25, 2.0, 1.0, -3.0]),
        };
        let canon = jf.normalized().unwrap();
        for (a, b) in [
            (jf.jacobian_factors(), canon.jacobian_factors()),
            (jf.hessian_factors(), canon.hessian_factors()),
        ] {
            let dims = a.dims();
            let ta = reconstruct(&a, &dims).unwrap();
            let tb = reconstruct(&b, &dims).unwrap();
            assert!(rel(&tb, &ta) <= 1e-12);
        }
        assert_eq!(canon.normalized().unwrap(), canon);
    }
}
