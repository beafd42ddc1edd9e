//! Factor match score: how well two factor matrices agree up to column
//! scaling (including sign) and permutation.

use nalgebra::DMatrix;

use super::TensorError;

#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatch {
    /// Smallest `|cos|` over the matched column pairs.
    pub score: f64,
    /// `permutation[i]` is the column of `B` matched to column `i` of `A`.
    pub permutation: Vec<usize>,
}

const EXHAUSTIVE_MAX_RANK: usize = 8;

/// Bottleneck assignment on `|cos|` between columns of `a` and `b`.
///
/// Up to rank 8 every permutation is tried (ties resolved by the larger sum
/// of `|cos|`); above that a threshold search over perfect matchings finds
/// the same optimal score.
pub fn factor_match(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<FactorMatch, TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::DimensionMismatch(format!(
            "factor_match needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let cos = cosine_matrix(a, b);
    let r = a.ncols();
    if r == 0 {
        return Ok(FactorMatch {
            score: 1.0,
            permutation: vec![],
        });
    }
    Ok(if r <= EXHAUSTIVE_MAX_RANK {
        exhaustive(&cos)
    } else {
        bottleneck(&cos)
    })
}

fn cosine_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let r = a.ncols();
    let na: Vec<f64> = (0..r).map(|i| a.column(i).norm()).collect();
    let nb: Vec<f64> = (0..r).map(|j| b.column(j).norm()).collect();
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    if na[i] == 0.0 || nb[j] == 0.0 {
                        0.0
                    } else {
                        (a.column(i).dot(&b.column(j)).abs() / (na[i] * nb[j])).min(1.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn exhaustive(cos: &[Vec<f64>]) -> FactorMatch {
    let r = cos.len();
    let mut perm: Vec<usize> = (0..r).collect();
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let min = p
            .iter()
            .enumerate()
            .map(|(i, &j)| cos[i][j])
            .fold(f64::INFINITY, f64::min);
        let sum: f64 = p.iter().enumerate().map(|(i, &j)| cos[i][j]).sum();
        if min > best.0 || (min == best.0 && sum > best.1) {
            best = (min, sum, p.to_vec());
        }
    });
    FactorMatch {
        score: best.0,
        permutation: best.2,
    }
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn bottleneck(cos: &[Vec<f64>]) -> FactorMatch {
    let r = cos.len();
    let mut levels: Vec<f64> = cos.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // largest level admitting a perfect matching; the smallest always does
    let (mut lo, mut hi) = (0, levels.len() - 1);
    let mut best = perfect_matching(cos, levels[0]).expect("complete bipartite graph");
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        match perfect_matching(cos, levels[mid]) {
            Some(m) => {
                lo = mid;
                best = m;
            }
            None => hi = mid - 1,
        }
    }
    let score = (0..r)
        .map(|i| cos[i][best[i]])
        .fold(f64::INFINITY, f64::min);
    FactorMatch {
        score,
        permutation: best,
    }
}

/// Kuhn's augmenting paths on edges with `cos >= threshold`.
fn perfect_matching(cos: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
    let r = cos.len();
    let mut owner: Vec<Option<usize>> = vec![None; r];
    fn augment(
        i: usize,
        cos: &[Vec<f64>],
        t: f64,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..cos.len() {
            if cos[i][j] >= t && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, cos, t, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..r {
        let mut seen = vec![false; r];
        if !augment(i, cos, threshold, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut perm = vec![0; r];
    for (j, o) in owner.iter().enumerate() {
        perm[o.expect("perfect matching")] = j;
    }
    Some(perm)
}
