//! Block successive upper-bound minimization learners for
//! `min ½‖Y − AX‖²_F + λ‖X‖₁` over the four constraint regimes.
//!
//! Every iteration runs a proximal-gradient step on the codes with
//! `τ_x = σ²_max(A)`, then a dictionary step: the exact ridge minimizer
//! (total-norm regime) or a gradient-projection step with `τ_a = σ²_max(X)`.
//! Each step minimizes a quadratic upper bound that is tight at the current
//! point, so the objective never increases.

use ndarray::{Array2, ArrayView2, Zip};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{frobenius_sq, inner};
use crate::model::{
    check_conforming, objective_from_residual, residual, CodeMatrix, ConstraintRegime, Dictionary, SolverConfig,
    SolverTrace, StopReason, TrainingMatrix,
};
use crate::proxops::{
    gradient_projection_step, project_dictionary, ridge_dictionary_update, shrink, shrink_nonneg, BisectionConfig,
    SpectralEstimator, TAU_SAFETY,
};
use crate::rng;

/// Upper limit on the number of atoms a problem may request.
pub const MAX_ATOMS: usize = 4096;

/// Dictionary step variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryUpdate {
    /// Exact block minimization (ridge with multiplier search). Total-norm regime only.
    Exact,
    /// Projected gradient step with `τ_a = σ²_max(X)`.
    GradientProjection,
}

#[derive(Debug, Clone)]
pub struct BsumProblem {
    pub y: TrainingMatrix,
    /// Number of atoms.
    pub k: usize,
    pub regime: ConstraintRegime,
    pub config: SolverConfig,
    /// `None` picks `Exact` for the total-norm regime and `GradientProjection` otherwise.
    pub dictionary_update: Option<DictionaryUpdate>,
    /// Starting dictionary; projected onto the regime before use. Random when absent.
    pub init_dictionary: Option<Array2<f64>>,
    /// Starting codes; projected onto `X ≥ 0` in non-negative regimes. Zero when absent.
    pub init_codes: Option<Array2<f64>>,
    pub bisection: BisectionConfig,
}

impl BsumProblem {
    pub fn new(y: TrainingMatrix, k: usize, regime: ConstraintRegime, config: SolverConfig) -> Self {
        Self {
            y,
            k,
            regime,
            config,
            dictionary_update: None,
            init_dictionary: None,
            init_codes: None,
            bisection: BisectionConfig::default(),
        }
    }

    pub fn with_dictionary_update(mut self, update: DictionaryUpdate) -> Self {
        self.dictionary_update = Some(update);
        self
    }

    pub fn with_init_dictionary(mut self, a: Array2<f64>) -> Self {
        self.init_dictionary = Some(a);
        self
    }

    pub fn with_init_codes(mut self, x: Array2<f64>) -> Self {
        self.init_codes = Some(x);
        self
    }

    fn update_rule(&self) -> DictionaryUpdate {
        self.dictionary_update.unwrap_or(match self.regime {
            ConstraintRegime::TotalNorm { .. } => DictionaryUpdate::Exact,
            _ => DictionaryUpdate::GradientProjection,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_ATOMS {
            return Err(Error::OutOfRange {
                what: "atom count",
                value: self.k,
                min: 1,
                max: MAX_ATOMS,
            });
        }
        self.config.validate()?;
        self.bisection.validate()?;
        self.regime.validate(Some(self.k))?;
        if self.update_rule() == DictionaryUpdate::Exact && !matches!(self.regime, ConstraintRegime::TotalNorm { .. }) {
            return Err(Error::Unsupported(
                "the exact dictionary update is only available for the total-norm regime".into(),
            ));
        }
        let (n, big_n) = (self.y.signal_dim(), self.y.signal_count());
        if let Some(a) = &self.init_dictionary {
            if a.dim() != (n, self.k) {
                return Err(shape_err(format!("initial dictionary is {:?}, expected {:?}", a.dim(), (n, self.k))));
            }
        }
        if let Some(x) = &self.init_codes {
            if x.dim() != (self.k, big_n) {
                return Err(shape_err(format!("initial codes are {:?}, expected {:?}", x.dim(), (self.k, big_n))));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BsumResult {
    pub dictionary: Dictionary,
    pub codes: CodeMatrix,
    pub trace: SolverTrace,
    pub stationarity_residual: f64,
}

/// Snapshot handed to an observer after every iteration.
#[derive(Debug)]
pub struct IterationRecord<'a> {
    pub iteration: usize,
    pub dictionary_before: ArrayView2<'a, f64>,
    pub codes_before: ArrayView2<'a, f64>,
    pub codes_after: ArrayView2<'a, f64>,
    pub dictionary_after: ArrayView2<'a, f64>,
    /// Step constant of the code update (taken at `dictionary_before`).
    pub tau_x: f64,
    /// Step constant of the dictionary update (taken at `codes_after`).
    pub tau_a: f64,
    /// Whether the dictionary step was the exact ridge minimization.
    pub exact_dictionary_step: bool,
    pub objective: f64,
}

/// Algorithm for `‖A‖²_F ≤ β` (Case I).
pub fn solve_case1(p: &BsumProblem) -> Result<BsumResult> {
    expect_regime(p, 1)?;
    solve_observed(p, |_| {})
}

/// Algorithm for `‖aᵢ‖² ≤ βᵢ` (Case II).
pub fn solve_case2(p: &BsumProblem) -> Result<BsumResult> {
    expect_regime(p, 2)?;
    solve_observed(p, |_| {})
}

/// Algorithm for `‖A‖²_F ≤ β, A ≥ 0, X ≥ 0` (Case III).
pub fn solve_case3(p: &BsumProblem) -> Result<BsumResult> {
    expect_regime(p, 3)?;
    solve_observed(p, |_| {})
}

/// Algorithm for `‖aᵢ‖₁ ≤ θ, A ≥ 0, X ≥ 0` (Case IV).
pub fn solve_case4(p: &BsumProblem) -> Result<BsumResult> {
    expect_regime(p, 4)?;
    solve_observed(p, |_| {})
}

/// Runs the learner matching `p.regime`.
pub fn solve(p: &BsumProblem) -> Result<BsumResult> {
    solve_observed(p, |_| {})
}

fn expect_regime(p: &BsumProblem, case: u8) -> Result<()> {
    if p.regime.case_number() != case {
        return Err(Error::InvalidArgument(format!(
            "case {case} solver called with a case {} regime",
            p.regime.case_number()
        )));
    }
    Ok(())
}

/// Prox-gradient map of the code block: `prox_{λ/τ}(X − Aᵀ(AX − Y)/τ)` where
/// the prox is soft shrinkage, or its non-negative variant.
fn code_step(x: ArrayView2<f64>, grad: ArrayView2<f64>, tau: f64, lambda: f64, nonneg: bool) -> Array2<f64> {
    let gamma = lambda / tau;
    let mut out = Array2::zeros(x.raw_dim());
    Zip::from(&mut out).and(&x).and(&grad).for_each(|o, &xv, &g| {
        let v = xv - g / tau;
        *o = if nonneg { shrink_nonneg(v, gamma) } else { shrink(v, gamma) };
    });
    out
}

/// Code update with a majorization guard: τ is doubled until
/// `‖AΔ‖² ≤ τ‖Δ‖²` holds for the produced step.
/// Returns `(X_new, AΔ, τ)`.
fn majorized_code_step(
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    r: ArrayView2<f64>,
    tau: f64,
    lambda: f64,
    nonneg: bool,
) -> (Array2<f64>, Array2<f64>, f64) {
    let grad = a.t().dot(&r);
    let mut tau = tau;
    loop {
        let x_new = code_step(x, grad.view(), tau, lambda, nonneg);
        let delta = &x_new - &x;
        let a_delta = a.dot(&delta);
        if frobenius_sq(a_delta.view()) <= tau * frobenius_sq(delta.view()) || !tau.is_finite() {
            return (x_new, a_delta, tau);
        }
        tau *= 2.0;
    }
}

fn majorized_dictionary_step(
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    r: ArrayView2<f64>,
    tau: f64,
    regime: &ConstraintRegime,
    cfg: &BisectionConfig,
) -> Result<(Array2<f64>, f64)> {
    let grad = r.dot(&x.t());
    let mut tau = tau;
    loop {
        let a_new = gradient_projection_step(a, grad.view(), tau, regime, cfg)?;
        let delta = &a_new - &a;
        let delta_x = delta.dot(&x);
        if frobenius_sq(delta_x.view()) <= tau * frobenius_sq(delta.view()) || !tau.is_finite() {
            return Ok((a_new, tau));
        }
        tau *= 2.0;
    }
}

pub(crate) fn initial_dictionary(p: &BsumProblem) -> Result<Array2<f64>> {
    let raw = match &p.init_dictionary {
        Some(a) => a.clone(),
        None => {
            let mut gen = rng::stream(p.config.seed, "bsum/init-dictionary", 0);
            Array2::from_shape_simple_fn((p.y.signal_dim(), p.k), || StandardNormal.sample(&mut gen))
        }
    };
    project_dictionary(raw.view(), &p.regime, &p.bisection)
}

fn initial_codes(p: &BsumProblem) -> Array2<f64> {
    match &p.init_codes {
        Some(x) if p.regime.is_nonnegative() => x.mapv(|v| v.max(0.0)),
        Some(x) => x.clone(),
        None => Array2::zeros((p.k, p.y.signal_count())),
    }
}

fn step_constant(est: f64, floor: f64) -> f64 {
    (est * TAU_SAFETY).max(floor)
}

/// Runs the learner for `p.regime`, invoking `observer` after every iteration.
pub fn solve_observed<F>(p: &BsumProblem, mut observer: F) -> Result<BsumResult>
where
    F: FnMut(&IterationRecord<'_>),
{
    solve_until(p, |rec| {
        observer(rec);
        false
    })
}

/// Like [`solve_observed`], but stops as soon as `stop` returns true.
pub(crate) fn solve_until<F>(p: &BsumProblem, mut stop: F) -> Result<BsumResult>
where
    F: FnMut(&IterationRecord<'_>) -> bool,
{
    p.validate()?;
    let y = p.y.view();
    let cfg = &p.config;
    let lambda = cfg.lambda;
    let nonneg = p.regime.is_nonnegative();
    let rule = p.update_rule();

    let mut a = initial_dictionary(p)?;
    let mut x = initial_codes(p);
    let mut r = residual(y, a.view(), x.view());
    let mut f = objective_from_residual(r.view(), x.view(), lambda);
    if !f.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            trace: Box::new(SolverTrace::start(f)),
        });
    }
    let mut trace = SolverTrace::start(f);
    let mut est_a = SpectralEstimator::default();
    let mut est_x = SpectralEstimator::default();

    for iteration in 1..=cfg.max_iters {
        // Code block.
        let tau_x0 = step_constant(est_a.estimate(a.view()), cfg.tau_floor);
        let (x_new, a_delta, tau_x) = majorized_code_step(a.view(), x.view(), r.view(), tau_x0, lambda, nonneg);
        let r_mid = &r + &a_delta;

        // Dictionary block.
        let tau_a0 = step_constant(est_x.estimate(x_new.view()), cfg.tau_floor);
        let (a_new, tau_a, r_new) = match (rule, &p.regime) {
            (DictionaryUpdate::Exact, ConstraintRegime::TotalNorm { beta }) => {
                let ridge = ridge_dictionary_update(y, x_new.view(), *beta, cfg.tau_floor, &p.bisection)?;
                let r_ridge = residual(y, ridge.dictionary.view(), x_new.view());
                // The multiplier is only resolved to floating-point precision;
                // never accept a ridge solution that is worse than keeping A.
                if frobenius_sq(r_ridge.view()) <= frobenius_sq(r_mid.view()) {
                    (ridge.dictionary, tau_a0, r_ridge)
                } else {
                    (a.clone(), tau_a0, r_mid.clone())
                }
            }
            _ => {
                let (a_next, tau) = majorized_dictionary_step(a.view(), x_new.view(), r_mid.view(), tau_a0, &p.regime, &p.bisection)?;
                let r_next = residual(y, a_next.view(), x_new.view());
                (a_next, tau, r_next)
            }
        };
        let f_new = objective_from_residual(r_new.view(), x_new.view(), lambda);

        let halt = stop(&IterationRecord {
            iteration,
            dictionary_before: a.view(),
            codes_before: x.view(),
            codes_after: x_new.view(),
            dictionary_after: a_new.view(),
            tau_x,
            tau_a,
            exact_dictionary_step: rule == DictionaryUpdate::Exact,
            objective: f_new,
        });

        trace.tau_x_history.push(tau_x);
        trace.tau_a_history.push(tau_a);
        trace.iterations = iteration;
        if !f_new.is_finite() {
            trace.objective_history.push(f_new);
            return Err(Error::Diverged {
                iteration,
                trace: Box::new(trace),
            });
        }
        trace.objective_history.push(f_new);

        let decrease_small = (f - f_new).abs() <= cfg.rel_obj_tol * f.abs().max(1.0);
        a = a_new;
        x = x_new;
        r = r_new;
        f = f_new;

        if halt {
            let res = residual_at(y, a.view(), x.view(), p, &mut est_a, &mut est_x)?;
            trace.stop_reason = StopReason::Converged;
            return finish(p, a, x, trace, res);
        }
        if decrease_small {
            let res = residual_at(y, a.view(), x.view(), p, &mut est_a, &mut est_x)?;
            if res <= cfg.stationarity_tol {
                trace.stop_reason = StopReason::Converged;
                return finish(p, a, x, trace, res);
            }
        }
    }
    let res = residual_at(y, a.view(), x.view(), p, &mut est_a, &mut est_x)?;
    trace.stop_reason = StopReason::MaxIters;
    finish(p, a, x, trace, res)
}

fn residual_at(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    p: &BsumProblem,
    est_a: &mut SpectralEstimator,
    est_x: &mut SpectralEstimator,
) -> Result<f64> {
    let tau_x = step_constant(est_a.estimate(a), p.config.tau_floor);
    let tau_a = step_constant(est_x.estimate(x), p.config.tau_floor);
    fixed_point_residual(y, a, x, p.config.lambda, &p.regime, tau_x, tau_a, &p.bisection)
}

fn finish(p: &BsumProblem, a: Array2<f64>, x: Array2<f64>, trace: SolverTrace, res: f64) -> Result<BsumResult> {
    Ok(BsumResult {
        dictionary: Dictionary::new(a, p.regime.clone())?,
        codes: CodeMatrix::new(x)?,
        trace,
        stationarity_residual: res,
    })
}

#[allow(clippy::too_many_arguments)]
fn fixed_point_residual(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    lambda: f64,
    regime: &ConstraintRegime,
    tau_x: f64,
    tau_a: f64,
    cfg: &BisectionConfig,
) -> Result<f64> {
    let r = residual(y, a, x);
    let grad_x = a.t().dot(&r);
    let x_map = code_step(x, grad_x.view(), tau_x, lambda, regime.is_nonnegative());
    let dx = frobenius_sq((&x_map - &x).view()).sqrt() / (1.0 + frobenius_sq(x).sqrt());

    let grad_a = r.dot(&x.t());
    let a_map = gradient_projection_step(a, grad_a.view(), tau_a, regime, cfg)?;
    let da = frobenius_sq((&a_map - &a).view()).sqrt() / (1.0 + frobenius_sq(a).sqrt());
    Ok(dx.max(da))
}

/// Fixed-point defect of the two block maps at `(A, X)`:
/// the larger of `‖X − T_X(X)‖/(1 + ‖X‖)` and `‖A − T_A(A)‖/(1 + ‖A‖)`, where
/// `T_X` is the code prox-gradient map with constant `tau_x` and `T_A` the
/// dictionary gradient-projection map with constant `tau_a`. Zero exactly at
/// stationary points of the regime's problem.
#[allow(clippy::too_many_arguments)]
pub fn stationarity_residual(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    lambda: f64,
    regime: &ConstraintRegime,
    tau_x: f64,
    tau_a: f64,
) -> Result<f64> {
    check_conforming(y, a, x)?;
    if !(tau_x > 0.0 && tau_a > 0.0) {
        return Err(Error::InvalidArgument("step constants must be positive".into()));
    }
    regime.validate(Some(a.ncols()))?;
    fixed_point_residual(y, a, x, lambda, regime, tau_x, tau_a, &BisectionConfig::default())
}

/// Code-only proximal-gradient iterations with the dictionary held fixed.
///
/// Starts from `init` (or zero) and stops on the same relative-decrease rule as
/// the learners. Used to sparse-code signals against a frozen dictionary.
pub fn sparse_code(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    init: Option<ArrayView2<f64>>,
    nonneg: bool,
    config: &SolverConfig,
) -> Result<(Array2<f64>, SolverTrace)> {
    config.validate()?;
    let mut x = match init {
        Some(x0) => {
            if x0.dim() != (a.ncols(), y.ncols()) {
                return Err(shape_err(format!("initial codes are {:?}", x0.dim())));
            }
            if nonneg {
                x0.mapv(|v| v.max(0.0))
            } else {
                x0.to_owned()
            }
        }
        None => Array2::zeros((a.ncols(), y.ncols())),
    };
    check_conforming(y, a, x.view())?;
    let lambda = config.lambda;
    let tau = step_constant(SpectralEstimator::default().estimate(a), config.tau_floor);
    let mut r = residual(y, a, x.view());
    let mut f = objective_from_residual(r.view(), x.view(), lambda);
    let mut trace = SolverTrace::start(f);
    for iteration in 1..=config.max_iters {
        let (x_new, a_delta, tau_used) = majorized_code_step(a, x.view(), r.view(), tau, lambda, nonneg);
        r += &a_delta;
        x = x_new;
        let f_new = objective_from_residual(r.view(), x.view(), lambda);
        trace.tau_x_history.push(tau_used);
        trace.objective_history.push(f_new);
        trace.iterations = iteration;
        if !f_new.is_finite() {
            return Err(Error::Diverged {
                iteration,
                trace: Box::new(trace),
            });
        }
        let done = (f - f_new).abs() <= config.rel_obj_tol * f.abs().max(1.0);
        f = f_new;
        if done {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok((x, trace))
}

/// Value of the quadratic upper bound used by the code step, at `x_new`:
/// `d₁(Y, A, X) + ⟨∇_X d₁, X_new − X⟩ + τ/2‖X_new − X‖² + λ‖X_new‖₁`.
pub fn code_surrogate(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    x_new: ArrayView2<f64>,
    tau: f64,
    lambda: f64,
) -> Result<f64> {
    check_conforming(y, a, x)?;
    let r = residual(y, a, x);
    let grad = a.t().dot(&r);
    let delta = &x_new - &x;
    Ok(0.5 * frobenius_sq(r.view())
        + inner(grad.view(), delta.view())
        + 0.5 * tau * frobenius_sq(delta.view())
        + lambda * crate::linalg::l1_norm(x_new))
}

/// Value of the quadratic upper bound used by the dictionary step, at `a_new`:
/// `d₁(Y, A, X) + ⟨∇_A d₁, A_new − A⟩ + τ/2‖A_new − A‖²`.
pub fn dictionary_surrogate(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x: ArrayView2<f64>,
    a_new: ArrayView2<f64>,
    tau: f64,
) -> Result<f64> {
    check_conforming(y, a, x)?;
    let r = residual(y, a, x);
    let grad = r.dot(&x.t());
    let delta = &a_new - &a;
    Ok(0.5 * frobenius_sq(r.view()) + inner(grad.view(), delta.view()) + 0.5 * tau * frobenius_sq(delta.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, objective};
    use ndarray::array;

    fn problem(y: Array2<f64>, k: usize, regime: ConstraintRegime, lambda: f64) -> BsumProblem {
        let config = SolverConfig {
            lambda,
            ..SolverConfig::default()
        };
        BsumProblem::new(TrainingMatrix::new(y).unwrap(), k, regime, config)
    }

    #[test]
    fn zero_data_converges_in_one_iteration() {
        let y = Array2::<f64>::zeros((3, 5));
        let res = solve_case1(&problem(y, 2, ConstraintRegime::TotalNorm { beta: 2.0 }, 0.1)).unwrap();
        assert_eq!(res.trace.iterations, 1);
        assert_eq!(res.trace.stop_reason, StopReason::Converged);
        assert_eq!(res.trace.final_objective(), 0.0);
        assert!(res.codes.matrix().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn huge_lambda_kills_codes() {
        let y = array![[1.0, -2.0, 0.5], [0.3, 0.7, -1.1]];
        let half_sq = 0.5 * frobenius_sq(y.view());
        let res = solve_case1(&problem(y, 2, ConstraintRegime::TotalNorm { beta: 1.0 }, 1e3)).unwrap();
        assert!(res.codes.matrix().iter().all(|v| *v == 0.0));
        assert!((res.trace.final_objective() - half_sq).abs() < 1e-12);
    }

    #[test]
    fn wrong_case_is_rejected() {
        let y = array![[1.0, 2.0]];
        let p = problem(y, 1, ConstraintRegime::TotalNorm { beta: 1.0 }, 0.1);
        assert!(solve_case2(&p).is_err());
        let p = p.with_dictionary_update(DictionaryUpdate::Exact);
        assert!(solve_case1(&p).is_ok());
        let y = array![[1.0, 2.0]];
        let p = problem(y, 1, ConstraintRegime::PerAtomNorm { betas: vec![1.0] }, 0.1)
            .with_dictionary_update(DictionaryUpdate::Exact);
        assert!(matches!(solve(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nonpositive_data_gives_zero_nonneg_codes() {
        let y = array![[-1.0, -0.5, -2.0], [-0.2, -0.1, -0.3], [0.0, -1.0, -0.4]];
        let half_sq = 0.5 * frobenius_sq(y.view());
        let res = solve_case3(&problem(y, 2, ConstraintRegime::NonnegTotalNorm { beta: 4.0 }, 0.1)).unwrap();
        assert!(res.codes.matrix().iter().all(|v| *v == 0.0));
        assert!((res.trace.final_objective() - half_sq).abs() < 1e-12);
    }

    #[test]
    fn tiny_beta_is_respected_every_iterate() {
        let y = array![[1.0, 2.0, 0.5, 0.1], [0.3, 0.7, 1.1, 0.9]];
        let regime = ConstraintRegime::NonnegTotalNorm { beta: 1e-8 };
        let p = problem(y, 2, regime.clone(), 1e-3);
        let mut worst = 0.0_f64;
        solve_observed(&p, |rec| {
            worst = worst.max(frobenius_sq(rec.dictionary_after));
            assert!(check_feasible(rec.dictionary_after, rec.codes_after, &regime, 1e-8));
        })
        .unwrap();
        assert!(worst <= 1e-8 * (1.0 + 1e-12));
    }

    #[test]
    fn planted_fixed_point_has_zero_residual() {
        let a = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        let x = array![[1.0, 0.0, 2.0, 0.0], [0.0, 1.5, 0.0, -1.0]];
        let y = a.dot(&x);
        let regime = ConstraintRegime::TotalNorm { beta: 100.0 };
        let r = stationarity_residual(y.view(), a.view(), x.view(), 0.0, &regime, 3.0, 7.0).unwrap();
        assert!(r <= 1e-10);
        let mut bumped = x.clone();
        bumped[[0, 0]] += 0.1;
        let r = stationarity_residual(y.view(), a.view(), bumped.view(), 0.0, &regime, 3.0, 7.0).unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn sparse_code_matches_orthonormal_shrinkage() {
        // With an orthonormal dictionary the lasso solution is S_λ(AᵀY).
        let a = Array2::<f64>::eye(3);
        let y = array![[2.0, -0.05], [0.3, 1.0], [-1.5, 0.0]];
        let cfg = SolverConfig {
            lambda: 0.2,
            ..SolverConfig::default()
        };
        let (x, trace) = sparse_code(y.view(), a.view(), None, false, &cfg).unwrap();
        let expected = crate::proxops::soft_shrink(y.view(), 0.2).unwrap();
        for (u, v) in x.iter().zip(expected.iter()) {
            assert!((u - v).abs() < 1e-9);
        }
        assert_eq!(trace.stop_reason, StopReason::Converged);
        let f = objective(y.view(), a.view(), x.view(), 0.2).unwrap();
        assert!((f - trace.final_objective()).abs() < 1e-12);
    }
}
