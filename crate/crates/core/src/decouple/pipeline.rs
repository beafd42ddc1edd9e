use nalgebra::DMatrix;
use serde::Serialize;

use super::dataset::{build_dataset, DerivativeDataset};
use super::reconstruct::reconstruct_g;
use super::sampling::{sample_points, SamplingConfig};
use super::{DecoupleError, Method};
use crate::polyfunc::{DecoupledModel, VectorPolynomial};
use crate::tensor::{
    cpd_als, factor_match, fit_last_factor, joint_cpd, joint_refine, reconstruct, CpdConfig,
    CpdResult, DenseTensor, JointFactors, JointWeights,
};

/// Offset added to the base seed for the solver's restarts.
pub const SOLVER_SEED_OFFSET: u64 = 100;
/// Offset added to the base seed for the validation points.
pub const VALIDATION_SEED_OFFSET: u64 = 7919;
/// Factor match score counted as recovering the true factors.
pub const RECOVERY_THRESHOLD: f64 = 0.999;

#[derive(Clone, Debug, PartialEq)]
pub struct DecoupleConfig {
    pub rank: usize,
    pub degree: usize,
    pub method: Method,
    pub cpd: CpdConfig,
    pub sampling: SamplingConfig,
    pub validation: SamplingConfig,
}

impl DecoupleConfig {
    /// Defaults (200 training points and 500 validation points on
    /// `[-10, 10]`) with every stage seeded from `seed`.
    pub fn new(rank: usize, degree: usize, method: Method, seed: u64) -> Self {
        DecoupleConfig {
            rank,
            degree,
            method,
            cpd: CpdConfig {
                seed: seed.wrapping_add(SOLVER_SEED_OFFSET),
                ..CpdConfig::with_rank(rank)
            },
            sampling: SamplingConfig::uniform(200, -10.0, 10.0, seed),
            validation: SamplingConfig::uniform(
                500,
                -10.0,
                10.0,
                seed.wrapping_add(VALIDATION_SEED_OFFSET),
            ),
        }
    }

    pub fn validate(&self) -> Result<(), DecoupleError> {
        if self.rank == 0 {
            return Err(DecoupleError::InvalidConfig(
                "rank must be at least 1".into(),
            ));
        }
        if self.degree == 0 {
            return Err(DecoupleError::InvalidConfig(
                "degree must be at least 1".into(),
            ));
        }
        if self.method == Method::Hessian && self.degree < 2 {
            return Err(DecoupleError::InvalidConfig(
                "the hessian method needs degree at least 2".into(),
            ));
        }
        if self.validation.seed == self.sampling.seed {
            return Err(DecoupleError::InvalidConfig(
                "validation points must use a seed different from the training points".into(),
            ));
        }
        self.solver_config().validate()?;
        Ok(())
    }

    fn solver_config(&self) -> CpdConfig {
        CpdConfig {
            rank: self.rank,
            ..self.cpd.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorResiduals {
    /// `‖J − [[W, V, G′]]‖ / ‖J‖`.
    pub jacobian: f64,
    /// `‖H − [[W, V, V, G″]]‖ / ‖H‖`.
    pub hessian: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub solver: String,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub best_restart: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub gradient_norm: Option<f64>,
    pub regularized: bool,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seeds {
    pub sampling: u64,
    pub solver: u64,
    pub validation: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecoupleReport {
    pub method: Method,
    pub rank: usize,
    pub degree: usize,
    pub num_samples: usize,
    pub model: DecoupledModel,
    pub tensor_residuals: TensorResiduals,
    pub g_fit_r2: Vec<f64>,
    pub validation_rel_error: f64,
    #[serde(rename = "factor_match_W")]
    pub factor_match_w: Option<f64>,
    #[serde(rename = "factor_match_V")]
    pub factor_match_v: Option<f64>,
    /// Whether both factor matches reach [`RECOVERY_THRESHOLD`]; absent
    /// without a ground truth.
    pub truth_recovered: Option<bool>,
    pub non_unique: bool,
    pub warnings: Vec<String>,
    pub diagnostics: SolverDiagnostics,
    pub seeds: Seeds,
}

impl DecoupleReport {
    /// Fills the factor match scores against a reference model with the
    /// same number of branches.
    pub fn score_against(&mut self, truth: &DecoupledModel) -> Result<(), DecoupleError> {
        self.score_against_with(truth, RECOVERY_THRESHOLD)
    }

    /// Like [`score_against`](Self::score_against) with a custom recovery
    /// threshold.
    pub fn score_against_with(
        &mut self,
        truth: &DecoupledModel,
        threshold: f64,
    ) -> Result<(), DecoupleError> {
        if truth.w().shape() != self.model.w().shape()
            || truth.v().shape() != self.model.v().shape()
        {
            return Err(DecoupleError::InvalidConfig(format!(
                "reference model has W {:?} and V {:?}, the recovered model has W {:?} and V {:?}",
                truth.w().shape(),
                truth.v().shape(),
                self.model.w().shape(),
                self.model.v().shape()
            )));
        }
        let w = factor_match(truth.w(), self.model.w())?.score;
        let v = factor_match(truth.v(), self.model.v())?.score;
        self.factor_match_w = Some(w);
        self.factor_match_v = Some(v);
        let recovered = w >= threshold && v >= threshold;
        self.truth_recovered = Some(recovered);
        if !recovered {
            self.warnings.push(format!(
                "recovered factors differ from the reference (factor match W {w:.6}, V {v:.6})"
            ));
        }
        Ok(())
    }
}

/// Samples `f`, builds the derivative tensors and runs `cfg.method`.
pub fn decouple(
    f: &VectorPolynomial,
    cfg: &DecoupleConfig,
) -> Result<DecoupleReport, DecoupleError> {
    cfg.validate()?;
    let x = sample_points(&cfg.sampling, f.num_vars())?;
    let ds = build_dataset(f, &x)?;
    match cfg.method {
        Method::Jacobian => decouple_first_order(f, &ds, cfg),
        Method::Hessian => decouple_second_order(f, &ds, cfg),
        Method::Joint => decouple_joint(f, &ds, cfg),
    }
}

/// CPD of the Jacobian tensor alone: alternating least squares, polished by
/// damped Gauss-Newton on the same cost.
pub fn decouple_first_order(
    f: &VectorPolynomial,
    ds: &DerivativeDataset,
    cfg: &DecoupleConfig,
) -> Result<DecoupleReport, DecoupleError> {
    cfg.validate()?;
    let mut solver_cfg = cfg.solver_config();
    solver_cfg.alpha2 = Some(0.0);
    let als = cpd_als(&ds.j, &solver_cfg)?;
    let mut fs = als.factors.clone().into_factors();
    let g1 = fs.pop().expect("three factors");
    let v = fs.pop().expect("three factors");
    let w = fs.pop().expect("three factors");
    let g2 = fit_last_factor(&ds.h, &[&w, &v, &v])?;
    let polished = joint_refine(&ds.j, &ds.h, &solver_cfg, &JointFactors { w, v, g1, g2 })?;
    let weights = JointWeights::resolve(&solver_cfg, &ds.j, &ds.h);

    let mut warnings = Vec::new();
    let non_unique = ds.num_outputs() == 1;
    if non_unique {
        warnings.push(
            "with a single output the Jacobian tensor is the matrix V·G′ᵀ; any invertible M \
             gives the equally exact factors V·M and G′·M⁻ᵀ, so the recovered factors are not unique"
                .to_string(),
        );
    }
    let mut diag = diagnostics(
        "als+levenberg-marquardt",
        &polished,
        &solver_cfg,
        Some(weights),
    );
    diag.iterations += als.iterations;
    diag.best_restart = als.restart_index;
    diag.initial_cost = weights.alpha1 * als.cost_trace[0];
    diag.regularized = als.regularized;
    finish(f, ds, cfg, polished.factors, diag, non_unique, warnings)
}

/// Hessian tensor alone: the joint solver with the Jacobian weight at zero.
pub fn decouple_second_order(
    f: &VectorPolynomial,
    ds: &DerivativeDataset,
    cfg: &DecoupleConfig,
) -> Result<DecoupleReport, DecoupleError> {
    let mut solver_cfg = cfg.solver_config();
    solver_cfg.alpha1 = Some(0.0);
    run_joint(f, ds, cfg, solver_cfg)
}

/// Jacobian and Hessian tensors together.
pub fn decouple_joint(
    f: &VectorPolynomial,
    ds: &DerivativeDataset,
    cfg: &DecoupleConfig,
) -> Result<DecoupleReport, DecoupleError> {
    run_joint(f, ds, cfg, cfg.solver_config())
}

fn run_joint(
    f: &VectorPolynomial,
    ds: &DerivativeDataset,
    cfg: &DecoupleConfig,
    solver_cfg: CpdConfig,
) -> Result<DecoupleReport, DecoupleError> {
    cfg.validate()?;
    let res = joint_cpd(&ds.j, &ds.h, &solver_cfg)?;
    let weights = JointWeights::resolve(&solver_cfg, &ds.j, &ds.h);
    let diagnostics = diagnostics("levenberg-marquardt", &res, &solver_cfg, Some(weights));
    finish(f, ds, cfg, res.factors, diagnostics, false, Vec::new())
}

fn diagnostics<F>(
    solver: &str,
    res: &CpdResult<F>,
    cfg: &CpdConfig,
    weights: Option<JointWeights>,
) -> SolverDiagnostics {
    SolverDiagnostics {
        solver: solver.to_string(),
        converged: res.converged,
        iterations: res.iterations,
        restarts: cfg.restarts,
        best_restart: res.restart_index,
        initial_cost: res.cost_trace[0],
        final_cost: res.final_cost,
        gradient_norm: res.gradient_norm,
        regularized: res.regularized,
        alpha1: weights.map(|w| w.alpha1),
        alpha2: weights.map(|w| w.alpha2),
    }
}

fn finish(
    f: &VectorPolynomial,
    ds: &DerivativeDataset,
    cfg: &DecoupleConfig,
    mut factors: JointFactors,
    diagnostics: SolverDiagnostics,
    non_unique: bool,
    mut warnings: Vec<String>,
) -> Result<DecoupleReport, DecoupleError> {
    if ds.j.is_zero() && ds.h.is_zero() {
        // nothing for the decomposition to find; unit directions let the
        // branch fit still carry constants
        let (n, m) = (ds.num_outputs(), ds.num_inputs());
        for r in 0..cfg.rank {
            factors.w.column_mut(r).fill(0.0);
            factors.w[(r % n, r)] = 1.0;
            factors.v.column_mut(r).fill(0.0);
            factors.v[(r % m, r)] = 1.0;
        }
    }
    let factors = factors.normalized()?;
    let fit = reconstruct_g(&factors, ds, cfg.degree, cfg.method)?;
    let model = DecoupledModel::new(factors.w.clone(), factors.v.clone(), fit.g)?;
    let tensor_residuals = TensorResiduals {
        jacobian: relative_residual(&ds.j, &factors.jacobian_factors())?,
        hessian: relative_residual(&ds.h, &factors.hessian_factors())?,
    };
    let validation_rel_error = validate_model(&model, f, &cfg.validation)?;
    if !diagnostics.converged {
        warnings.push(format!(
            "solver stopped after {} iterations without meeting the convergence test",
            diagnostics.iterations
        ));
    }
    Ok(DecoupleReport {
        method: cfg.method,
        rank: cfg.rank,
        degree: cfg.degree,
        num_samples: ds.num_samples(),
        model,
        tensor_residuals,
        g_fit_r2: fit.r2,
        validation_rel_error,
        factor_match_w: None,
        factor_match_v: None,
        truth_recovered: None,
        non_unique,
        warnings,
        diagnostics,
        seeds: Seeds {
            sampling: cfg.sampling.seed,
            solver: cfg.cpd.seed,
            validation: cfg.validation.seed,
        },
    })
}

fn relative_residual(t: &DenseTensor, fs: &crate::tensor::FactorSet) -> Result<f64, DecoupleError> {
    let diff = reconstruct(fs, t.dims())?.distance(t);
    let norm = t.frobenius_norm();
    Ok(if norm > 0.0 { diff / norm } else { diff })
}

/// `max_k ‖f(x_k) − model(x_k)‖ / (1 + ‖f(x_k)‖)` over fresh points.
pub fn validate_model(
    model: &DecoupledModel,
    f: &VectorPolynomial,
    test_cfg: &SamplingConfig,
) -> Result<f64, DecoupleError> {
    if model.num_inputs() != f.num_vars() || model.num_outputs() != f.num_outputs() {
        return Err(DecoupleError::InvalidConfig(format!(
            "model maps {} inputs to {} outputs but the function maps {} to {}",
            model.num_inputs(),
            model.num_outputs(),
            f.num_vars(),
            f.num_outputs()
        )));
    }
    let x = sample_points(test_cfg, f.num_vars())?;
    let eval = f.evaluator();
    let mut worst = 0.0f64;
    for k in 0..x.nrows() {
        let point: Vec<f64> = x.row(k).iter().copied().collect();
        let want = DMatrix::from_vec(f.num_outputs(), 1, eval.value(&point)?);
        let got = DMatrix::from_vec(f.num_outputs(), 1, model.evaluate(&point)?);
        worst = worst.max((&want - &got).norm() / (1.0 + want.norm()));
    }
    Ok(worst)
}
