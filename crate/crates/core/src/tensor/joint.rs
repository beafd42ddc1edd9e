//! Joint partially symmetric CPD of a Jacobian tensor `J (n×m×N)` and a
//! Hessian tensor `H (n×m×m×N)`:
//!
//! `α1‖J − [[W, V, G1]]‖² + α2‖H − [[W, V, V, G2]]‖²`
//!
//! minimized over all four factors at once by damped Gauss-Newton
//! (Levenberg-Marquardt). The rows of `G1`/`G2` only touch their own sample,
//! so the normal equations are block-arrow shaped; the per-sample blocks are
//! eliminated with a Schur complement and only a `(n+m)R` system is
//! factored per step.
//!
//! When `n = 1` the output factor is absorbed into `G1`/`G2` and held at 1.
//! A term with zero weight does not constrain its `G`; that factor is filled
//! in afterwards by linear least squares given `W` and `V`.

use nalgebra::{DMatrix, DVector};

use super::als::{cpd_als, random_factors, EXACT_FIT, NUMERICAL_ZERO};
use super::config::{better, CpdConfig, CpdResult};
use super::dense::DenseTensor;
use super::factors::{fit_last_factor, reconstruct, JointFactors};
use super::TensorError;

/// Resolved weights of the two cost terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointWeights {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl JointWeights {
    /// Explicit weights win; missing ones default to `1/‖·‖²` (0 for an
    /// all-zero tensor).
    pub fn resolve(cfg: &CpdConfig, j: &DenseTensor, h: &DenseTensor) -> Self {
        let inv = |t: &DenseTensor| {
            let n2 = t.frobenius_norm().powi(2);
            if n2 > 0.0 {
                1.0 / n2
            } else {
                0.0
            }
        };
        JointWeights {
            alpha1: cfg.alpha1.unwrap_or_else(|| inv(j)),
            alpha2: cfg.alpha2.unwrap_or_else(|| inv(h)),
        }
    }
}

/// Weighted cost evaluated through full tensor reconstructions.
pub fn joint_cost(
    j: &DenseTensor,
    h: &DenseTensor,
    factors: &JointFactors,
    weights: JointWeights,
) -> Result<f64, TensorError> {
    let shape = Shape::check(j, h)?;
    shape.check_factors(factors)?;
    let rj = reconstruct(&factors.jacobian_factors(), j.dims())?.distance(j);
    let rh = reconstruct(&factors.hessian_factors(), h.dims())?.distance(h);
    Ok(weights.alpha1 * rj * rj + weights.alpha2 * rh * rh)
}

/// Cost and its analytic gradient with respect to `W`, `V`, `G1`, `G2`.
pub fn joint_cost_gradient(
    j: &DenseTensor,
    h: &DenseTensor,
    factors: &JointFactors,
    weights: JointWeights,
) -> Result<(f64, JointFactors), TensorError> {
    let shape = Shape::check(j, h)?;
    shape.check_factors(factors)?;
    let p = Problem::new(j, h, shape, factors.rank(), weights, true, true).with_free_w();
    let sys = p.normal_equations(factors);
    Ok((sys.cost, p.unpack_gradient(&sys)))
}

pub fn joint_cpd(
    j: &DenseTensor,
    h: &DenseTensor,
    cfg: &CpdConfig,
) -> Result<CpdResult<JointFactors>, TensorError> {
    let problem = match Problem::prepare(j, h, cfg)? {
        Prepared::Solve(p) => p,
        Prepared::Trivial(res) => return Ok(res),
    };
    let schedule = problem.init_schedule();
    let mut best: Option<CpdResult<JointFactors>> = None;
    for restart in 0..cfg.restarts {
        let seed = cfg.seed.wrapping_add(restart as u64);
        let init = problem.initial_point(schedule[restart % schedule.len()], seed, cfg);
        let mut run = problem.levenberg_marquardt(init, cfg.max_iters, cfg.tol);
        run.restart_index = restart;
        log::debug!(
            "joint restart {restart}: cost {:e} after {} iterations (converged: {})",
            run.final_cost,
            run.iterations,
            run.converged
        );
        let exact = run.final_cost <= EXACT_FIT * problem.zero_cost();
        if best
            .as_ref()
            .is_none_or(|b| better(run.final_cost, b.final_cost))
        {
            best = Some(run);
        }
        if exact {
            break;
        }
    }
    let mut best = best.expect("at least one restart");
    problem.fill_unweighted(&mut best.factors);
    Ok(best)
}

/// A single damped Gauss-Newton run of the joint cost from `init`, for
/// polishing factors found by another method. `cfg.restarts` and
/// `cfg.seed` are ignored.
pub fn joint_refine(
    j: &DenseTensor,
    h: &DenseTensor,
    cfg: &CpdConfig,
    init: &JointFactors,
) -> Result<CpdResult<JointFactors>, TensorError> {
    let problem = match Problem::prepare(j, h, cfg)? {
        Prepared::Solve(p) => p,
        Prepared::Trivial(res) => return Ok(res),
    };
    problem.shape.check_factors(init)?;
    if init
        .w
        .iter()
        .chain(init.v.iter())
        .chain(init.g1.iter())
        .chain(init.g2.iter())
        .any(|x| !x.is_finite())
    {
        return Err(TensorError::NonFinite);
    }
    let mut start = init.clone();
    problem.absorb_w(&mut start);
    let mut res = problem.levenberg_marquardt(start, cfg.max_iters, cfg.tol);
    problem.fill_unweighted(&mut res.factors);
    Ok(res)
}

/// How a restart obtains its starting `W` and `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum InitStrategy {
    AlsJacobian,
    AlsHessian,
    Random,
}

enum Prepared<'a> {
    Solve(Problem<'a>),
    Trivial(CpdResult<JointFactors>),
}

#[derive(Clone, Copy, Debug)]
struct Shape {
    n: usize,
    m: usize,
    samples: usize,
}

impl Shape {
    fn check(j: &DenseTensor, h: &DenseTensor) -> Result<Self, TensorError> {
        let (jd, hd) = (j.dims(), h.dims());
        if jd.len() != 3 || hd.len() != 4 {
            return Err(TensorError::DimensionMismatch(format!(
                "expected J of order 3 and H of order 4, got {jd:?} and {hd:?}"
            )));
        }
        if hd != [jd[0], jd[1], jd[1], jd[2]] {
            return Err(TensorError::DimensionMismatch(format!(
                "J {jd:?} and H {hd:?} disagree on n, m or N"
            )));
        }
        Ok(Shape {
            n: jd[0],
            m: jd[1],
            samples: jd[2],
        })
    }

    fn check_factors(&self, f: &JointFactors) -> Result<(), TensorError> {
        let r = f.rank();
        let ok = f.w.shape() == (self.n, r)
            && f.v.shape() == (self.m, r)
            && f.g1.shape() == (self.samples, r)
            && f.g2.shape() == (self.samples, r);
        if ok {
            Ok(())
        } else {
            Err(TensorError::DimensionMismatch(
                "joint factors do not match the tensor shapes".into(),
            ))
        }
    }
}

fn check_symmetry(h: &DenseTensor, s: Shape) -> Result<(), TensorError> {
    let scale = h.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut worst = 0.0f64;
    for p in 0..s.n {
        for q in 0..s.m {
            for r in (q + 1)..s.m {
                for k in 0..s.samples {
                    worst = worst.max((h.get(&[p, q, r, k]) - h.get(&[p, r, q, k])).abs());
                }
            }
        }
    }
    if worst > 1e-12 * scale {
        Err(TensorError::Asymmetric(worst / scale))
    } else {
        Ok(())
    }
}

/// Normal-equation pieces at one point.
struct NormalSystem {
    cost: f64,
    shared_hess: DMatrix<f64>,
    shared_grad: DVector<f64>,
    cross: Vec<DMatrix<f64>>,
    local_hess: Vec<DMatrix<f64>>,
    local_grad: Vec<DVector<f64>>,
}

impl NormalSystem {
    fn gradient_norm(&self) -> f64 {
        let s: f64 = self.shared_grad.norm_squared()
            + self
                .local_grad
                .iter()
                .map(|g| g.norm_squared())
                .sum::<f64>();
        2.0 * s.sqrt()
    }
}

struct Problem<'a> {
    j: &'a DenseTensor,
    h: &'a DenseTensor,
    shape: Shape,
    rank: usize,
    weights: JointWeights,
    sqrt_a1: f64,
    sqrt_a2: f64,
    use_j: bool,
    use_h: bool,
    free_w: bool,
}

impl<'a> Problem<'a> {
    fn prepare(
        j: &'a DenseTensor,
        h: &'a DenseTensor,
        cfg: &CpdConfig,
    ) -> Result<Prepared<'a>, TensorError> {
        cfg.validate()?;
        let shape = Shape::check(j, h)?;
        if j.has_non_finite() || h.has_non_finite() {
            return Err(TensorError::NonFinite);
        }
        check_symmetry(h, shape)?;
        if j.is_zero() && h.is_zero() {
            return Ok(Prepared::Trivial(CpdResult {
                factors: JointFactors::zeros(shape.n, shape.m, shape.samples, cfg.rank),
                final_cost: 0.0,
                cost_trace: vec![0.0],
                converged: true,
                restart_index: 0,
                iterations: 0,
                regularized: false,
                gradient_norm: Some(0.0),
            }));
        }
        let weights = JointWeights::resolve(cfg, j, h);
        if weights.alpha1 == 0.0 && weights.alpha2 == 0.0 {
            return Err(TensorError::InvalidConfig(
                "both cost terms have zero weight".into(),
            ));
        }
        let (use_j, use_h) = (weights.alpha1 > 0.0, weights.alpha2 > 0.0);
        Ok(Prepared::Solve(Problem::new(
            j, h, shape, cfg.rank, weights, use_j, use_h,
        )))
    }

    fn new(
        j: &'a DenseTensor,
        h: &'a DenseTensor,
        shape: Shape,
        rank: usize,
        weights: JointWeights,
        use_j: bool,
        use_h: bool,
    ) -> Self {
        Problem {
            j,
            h,
            shape,
            rank,
            weights,
            sqrt_a1: weights.alpha1.sqrt(),
            sqrt_a2: weights.alpha2.sqrt(),
            use_j,
            use_h,
            free_w: shape.n > 1,
        }
    }

    fn with_free_w(mut self) -> Self {
        self.free_w = true;
        self
    }

    fn w_params(&self) -> usize {
        if self.free_w {
            self.shape.n * self.rank
        } else {
            0
        }
    }

    fn shared_params(&self) -> usize {
        self.w_params() + self.shape.m * self.rank
    }

    fn local_params(&self) -> usize {
        self.rank * (self.use_j as usize + self.use_h as usize)
    }

    fn residual_rows(&self) -> usize {
        let (n, m) = (self.shape.n, self.shape.m);
        (if self.use_j { n * m } else { 0 }) + (if self.use_h { n * m * m } else { 0 })
    }

    /// Residuals `model − data` (weighted) of sample `k` and their
    /// derivatives with respect to the shared and local parameters.
    fn sample_block(
        &self,
        f: &JointFactors,
        k: usize,
        e: &mut DVector<f64>,
        a: &mut DMatrix<f64>,
        b: &mut DMatrix<f64>,
    ) {
        let Shape { n, m, samples } = self.shape;
        let rk = self.rank;
        let wo = self.w_params();
        let g2_off = if self.use_j { rk } else { 0 };
        a.fill(0.0);
        b.fill(0.0);
        let mut row = 0;
        if self.use_j {
            let s = self.sqrt_a1;
            for p in 0..n {
                for q in 0..m {
                    let mut model = 0.0;
                    for r in 0..rk {
                        let (w, v, g) = (f.w[(p, r)], f.v[(q, r)], f.g1[(k, r)]);
                        model += w * v * g;
                        if self.free_w {
                            a[(row, p * rk + r)] = s * v * g;
                        }
                        a[(row, wo + q * rk + r)] = s * w * g;
                        b[(row, r)] = s * w * v;
                    }
                    e[row] = s * (model - self.j.data()[(p * m + q) * samples + k]);
                    row += 1;
                }
            }
        }
        if self.use_h {
            let s = self.sqrt_a2;
            for p in 0..n {
                for q in 0..m {
                    for t in 0..m {
                        let mut model = 0.0;
                        for r in 0..rk {
                            let (w, vq, vt, g) =
                                (f.w[(p, r)], f.v[(q, r)], f.v[(t, r)], f.g2[(k, r)]);
                            model += w * vq * vt * g;
                            if self.free_w {
                                a[(row, p * rk + r)] = s * vq * vt * g;
                            }
                            a[(row, wo + q * rk + r)] += s * w * vt * g;
                            a[(row, wo + t * rk + r)] += s * w * vq * g;
                            b[(row, g2_off + r)] = s * w * vq * vt;
                        }
                        e[row] = s * (model - self.h.data()[((p * m + q) * m + t) * samples + k]);
                        row += 1;
                    }
                }
            }
        }
    }

    fn normal_equations(&self, f: &JointFactors) -> NormalSystem {
        let (pa, pb, rows) = (
            self.shared_params(),
            self.local_params(),
            self.residual_rows(),
        );
        let mut e = DVector::zeros(rows);
        let mut a = DMatrix::zeros(rows, pa);
        let mut b = DMatrix::zeros(rows, pb);
        let mut sys = NormalSystem {
            cost: 0.0,
            shared_hess: DMatrix::zeros(pa, pa),
            shared_grad: DVector::zeros(pa),
            cross: Vec::with_capacity(self.shape.samples),
            local_hess: Vec::with_capacity(self.shape.samples),
            local_grad: Vec::with_capacity(self.shape.samples),
        };
        for k in 0..self.shape.samples {
            self.sample_block(f, k, &mut e, &mut a, &mut b);
            sys.cost += e.norm_squared();
            sys.shared_hess += a.tr_mul(&a);
            sys.shared_grad += a.tr_mul(&e);
            sys.cross.push(a.tr_mul(&b));
            sys.local_hess.push(b.tr_mul(&b));
            sys.local_grad.push(b.tr_mul(&e));
        }
        sys
    }

    fn cost(&self, f: &JointFactors) -> f64 {
        let rows = self.residual_rows();
        let mut e = DVector::zeros(rows);
        let mut a = DMatrix::zeros(rows, self.shared_params());
        let mut b = DMatrix::zeros(rows, self.local_params());
        (0..self.shape.samples)
            .map(|k| {
                self.sample_block(f, k, &mut e, &mut a, &mut b);
                e.norm_squared()
            })
            .sum()
    }

    fn unpack_gradient(&self, sys: &NormalSystem) -> JointFactors {
        let Shape { n, m, samples } = self.shape;
        let rk = self.rank;
        let wo = self.w_params();
        let mut g = JointFactors::zeros(n, m, samples, rk);
        for r in 0..rk {
            if self.free_w {
                for p in 0..n {
                    g.w[(p, r)] = 2.0 * sys.shared_grad[p * rk + r];
                }
            }
            for q in 0..m {
                g.v[(q, r)] = 2.0 * sys.shared_grad[wo + q * rk + r];
            }
            for k in 0..samples {
                if self.use_j {
                    g.g1[(k, r)] = 2.0 * sys.local_grad[k][r];
                }
                if self.use_h {
                    let off = if self.use_j { rk } else { 0 };
                    g.g2[(k, r)] = 2.0 * sys.local_grad[k][off + r];
                }
            }
        }
        g
    }

    fn apply_step(&self, f: &JointFactors, da: &DVector<f64>, db: &[DVector<f64>]) -> JointFactors {
        let rk = self.rank;
        let wo = self.w_params();
        let mut out = f.clone();
        for r in 0..rk {
            if self.free_w {
                for p in 0..self.shape.n {
                    out.w[(p, r)] += da[p * rk + r];
                }
            }
            for q in 0..self.shape.m {
                out.v[(q, r)] += da[wo + q * rk + r];
            }
            for (k, d) in db.iter().enumerate() {
                if self.use_j {
                    out.g1[(k, r)] += d[r];
                }
                if self.use_h {
                    let off = if self.use_j { rk } else { 0 };
                    out.g2[(k, r)] += d[off + r];
                }
            }
        }
        out
    }

    /// Damped Gauss-Newton step with Marquardt scaling, solved through the
    /// Schur complement of the per-sample blocks.
    fn damped_step(
        &self,
        sys: &NormalSystem,
        mu: f64,
    ) -> Option<(DVector<f64>, Vec<DVector<f64>>, f64)> {
        let diag_max = sys
            .local_hess
            .iter()
            .map(|h| h.diagonal().max())
            .fold(sys.shared_hess.diagonal().max(), f64::max);
        let floor = 1e-12 * diag_max.max(f64::MIN_POSITIVE);

        let mut schur = sys.shared_hess.clone();
        for i in 0..schur.nrows() {
            schur[(i, i)] += mu * sys.shared_hess[(i, i)].max(floor);
        }
        let mut rhs = -&sys.shared_grad;
        let mut local_inv = Vec::with_capacity(sys.local_hess.len());
        for (k, lh) in sys.local_hess.iter().enumerate() {
            let mut y = lh.clone();
            for i in 0..y.nrows() {
                y[(i, i)] += mu * lh[(i, i)].max(floor);
            }
            let inv = y.cholesky()?.inverse();
            let wy = &sys.cross[k] * &inv;
            schur -= &wy * sys.cross[k].transpose();
            rhs += &wy * &sys.local_grad[k];
            local_inv.push(inv);
        }
        // symmetrize against rounding before factoring
        let schur = (&schur + schur.transpose()) * 0.5;
        let da = schur.cholesky()?.solve(&rhs);
        let mut db = Vec::with_capacity(local_inv.len());
        let mut scaled = 0.0;
        for (k, inv) in local_inv.iter().enumerate() {
            let d = inv * (-&sys.local_grad[k] - sys.cross[k].tr_mul(&da));
            for i in 0..d.len() {
                scaled += sys.local_hess[k][(i, i)].max(floor) * d[i] * d[i];
            }
            db.push(d);
        }
        for i in 0..da.len() {
            scaled += sys.shared_hess[(i, i)].max(floor) * da[i] * da[i];
        }
        // predicted decrease of the cost: -δᵀ(Aᵀe) + μ δᵀDδ
        let lin = sys.shared_grad.dot(&da)
            + sys
                .local_grad
                .iter()
                .zip(&db)
                .map(|(g, d)| g.dot(d))
                .sum::<f64>();
        let predicted = -lin + mu * scaled;
        if !(predicted.is_finite() && da.iter().all(|x| x.is_finite())) {
            return None;
        }
        Some((da, db, predicted))
    }

    /// Cost of the all-zero factors.
    fn zero_cost(&self) -> f64 {
        let term = |used: bool, a: f64, t: &DenseTensor| {
            if used {
                a * t.frobenius_norm().powi(2)
            } else {
                0.0
            }
        };
        term(self.use_j, self.weights.alpha1, self.j)
            + term(self.use_h, self.weights.alpha2, self.h)
    }

    fn levenberg_marquardt(
        &self,
        init: JointFactors,
        max_iters: usize,
        tol: f64,
    ) -> CpdResult<JointFactors> {
        let zero_cost = self.zero_cost();
        let mut f = init;
        let mut sys = self.normal_equations(&f);
        let mut trace = vec![sys.cost];
        let mut mu = 1e-3;
        let mut nu = 2.0;
        let mut iterations = 0;
        let mut converged = false;
        let mut stalled = 0;
        // quadratic convergence near an exact fit is cheap to follow to the
        // rounding floor, so keep stepping while each step halves the cost
        let mut fast = false;
        while iterations < max_iters {
            let gnorm = sys.gradient_norm();
            if sys.cost <= NUMERICAL_ZERO * zero_cost || (gnorm <= tol * (1.0 + sys.cost) && !fast)
            {
                converged = true;
                break;
            }
            iterations += 1;
            let mut accepted = false;
            while mu < 1e32 {
                let Some((da, db, predicted)) = self.damped_step(&sys, mu) else {
                    mu *= nu;
                    nu *= 2.0;
                    continue;
                };
                let candidate = self.apply_step(&f, &da, &db);
                let new_cost = self.cost(&candidate);
                let rho = (sys.cost - new_cost) / predicted;
                if new_cost.is_finite() && new_cost < sys.cost && rho > 0.0 {
                    let rel_decrease = (sys.cost - new_cost) / sys.cost;
                    stalled = if rel_decrease < 1e-15 { stalled + 1 } else { 0 };
                    fast = new_cost < 0.5 * sys.cost;
                    mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                    nu = 2.0;
                    f = candidate;
                    sys = self.normal_equations(&f);
                    trace.push(sys.cost);
                    accepted = true;
                    break;
                }
                mu *= nu;
                nu *= 2.0;
            }
            if !accepted || stalled >= 10 {
                break;
            }
        }
        let gnorm = sys.gradient_norm();
        if !converged {
            converged = gnorm <= tol * (1.0 + sys.cost) || sys.cost <= NUMERICAL_ZERO * zero_cost;
        }
        CpdResult {
            factors: f,
            final_cost: sys.cost,
            cost_trace: trace,
            converged,
            restart_index: 0,
            iterations,
            regularized: false,
            gradient_norm: Some(gnorm),
        }
    }

    /// Restarts cycle through these; ALS on a tensor only when its term is
    /// active.
    fn init_schedule(&self) -> Vec<InitStrategy> {
        let mut s = Vec::with_capacity(3);
        if self.use_j {
            s.push(InitStrategy::AlsJacobian);
        }
        if self.use_h {
            s.push(InitStrategy::AlsHessian);
        }
        s.push(InitStrategy::Random);
        s
    }

    fn initial_point(&self, strategy: InitStrategy, seed: u64, cfg: &CpdConfig) -> JointFactors {
        let Shape { n, m, samples } = self.shape;
        let rk = self.rank;
        let als_cfg = CpdConfig {
            rank: rk,
            max_iters: cfg.max_iters.min(INIT_ALS_ITERS),
            tol: cfg.tol,
            restarts: 1,
            seed,
            alpha1: None,
            alpha2: None,
        };
        let from_als = match strategy {
            InitStrategy::AlsJacobian => cpd_als(self.j, &als_cfg).ok(),
            InitStrategy::AlsHessian => cpd_als(self.h, &als_cfg).ok(),
            InitStrategy::Random => None,
        };
        let mut f = JointFactors::zeros(n, m, samples, rk);
        if let Some(res) = from_als {
            f.w = res.factors.factor(0).clone();
            f.v = res.factors.factor(1).clone();
        }
        let usable = (0..rk).all(|r| f.w.column(r).norm() > 0.0 && f.v.column(r).norm() > 0.0);
        if !usable {
            let mut rand = random_factors(&[n, m], rk, seed);
            f.v = rand.pop().expect("two factors");
            f.w = rand.pop().expect("two factors");
        }
        if !self.free_w {
            f.w.fill(1.0);
        }
        self.balance(&mut f);
        // the sample factors are linear given W and V
        f.g1 = self.fit_g1(&f.w, &f.v);
        f.g2 = self.fit_g2(&f.w, &f.v);
        f
    }

    /// With a single output `W` is fixed at 1 and its scale moves into the
    /// sample factors.
    fn absorb_w(&self, f: &mut JointFactors) {
        if self.free_w {
            return;
        }
        for r in 0..self.rank {
            let s = f.w[(0, r)];
            if s != 0.0 {
                f.g1.column_mut(r).scale_mut(s);
                f.g2.column_mut(r).scale_mut(s);
            }
        }
        f.w.fill(1.0);
    }

    // unit-norm V (and free W) columns, scales into G1
    fn balance(&self, f: &mut JointFactors) {
        for r in 0..self.rank {
            let sv = f.v.column(r).norm();
            if sv > 0.0 {
                f.v.column_mut(r).scale_mut(1.0 / sv);
                f.g1.column_mut(r).scale_mut(sv);
            }
            if self.free_w {
                let sw = f.w.column(r).norm();
                if sw > 0.0 {
                    f.w.column_mut(r).scale_mut(1.0 / sw);
                    f.g1.column_mut(r).scale_mut(sw);
                }
            }
        }
    }

    fn fit_g1(&self, w: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        fit_last_factor(self.j, &[w, v]).expect("shapes checked")
    }

    fn fit_g2(&self, w: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        fit_last_factor(self.h, &[w, v, v]).expect("shapes checked")
    }

    fn fill_unweighted(&self, f: &mut JointFactors) {
        if !self.use_j {
            f.g1 = self.fit_g1(&f.w, &f.v);
        }
        if !self.use_h {
            f.g2 = self.fit_g2(&f.w, &f.v);
        }
    }
}

const INIT_ALS_ITERS: usize = 200;
