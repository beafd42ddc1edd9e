use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DecoupleError;

/// Uniform sampling box. `lo`/`hi` hold one bound per input, or a single
/// bound applied to every input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub num_points: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            num_points: 200,
            lo: vec![-10.0],
            hi: vec![10.0],
            seed: 42,
        }
    }
}

impl SamplingConfig {
    pub fn uniform(num_points: usize, lo: f64, hi: f64, seed: u64) -> Self {
        SamplingConfig {
            num_points,
            lo: vec![lo],
            hi: vec![hi],
            seed,
        }
    }

    /// Bounds of every input for an `m`-dimensional domain.
    pub fn bounds(&self, m: usize) -> Result<Vec<(f64, f64)>, DecoupleError> {
        if self.num_points == 0 {
            return Err(DecoupleError::InvalidConfig(
                "need at least one sample point".into(),
            ));
        }
        let pick = |v: &[f64], j: usize, name: &str| match v.len() {
            1 => Ok(v[0]),
            len if len == m => Ok(v[j]),
            len => Err(DecoupleError::InvalidConfig(format!(
                "{name} has {len} entries for {m} inputs"
            ))),
        };
        (0..m)
            .map(|j| {
                let (lo, hi) = (pick(&self.lo, j, "lo")?, pick(&self.hi, j, "hi")?);
                if lo < hi && lo.is_finite() && hi.is_finite() {
                    Ok((lo, hi))
                } else {
                    Err(DecoupleError::InvalidConfig(format!(
                        "bounds of x{} must satisfy lo < hi, got [{lo}, {hi}]",
                        j + 1
                    )))
                }
            })
            .collect()
    }
}

/// `N × m` matrix of i.i.d. uniform points in `[lo, hi)`, filled point by
/// point from a ChaCha8 stream seeded with `cfg.seed`.
pub fn sample_points(cfg: &SamplingConfig, m: usize) -> Result<DMatrix<f64>, DecoupleError> {
    let bounds = cfg.bounds(m)?;
    let dists: Vec<Uniform<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            Uniform::new(lo, hi).map_err(|e| DecoupleError::InvalidConfig(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = DMatrix::zeros(cfg.num_points, m);
    for k in 0..cfg.num_points {
        for (j, d) in dists.iter().enumerate() {
            x[(k, j)] = d.sample(&mut rng);
        }
    }
    Ok(x)
}
