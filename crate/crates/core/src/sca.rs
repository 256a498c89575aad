//! Successive convex approximation for
//!
//! ```text
//! min h₀(x) = f₀(x) + g₀(x)   s.t.   hᵢ(x) = fᵢ(x) + gᵢ(x) ≤ 0,  i = 1..m
//! ```
//!
//! with smooth `fᵢ` and convex `gᵢ`. Each iteration replaces every `fᵢ` by a
//! convex upper bound anchored at the current point, solves the convex
//! subproblem and moves toward its solution with step γ. Because the
//! surrogates are upper bounds, every iterate stays feasible and `h₀` never
//! increases.
//!
//! The constrained-fit learner `min ‖X‖₁ s.t. ½‖Y − AX‖²_F ≤ α` is built on
//! the same idea with a closed-form X-subproblem ([`solve_l1_over_ball`]).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::bsum::{initial_dictionary, solve_until, BsumProblem, BsumResult};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{frobenius_sq, l1_norm};
use crate::model::{
    residual, CodeMatrix, ConstraintRegime, Dictionary, SolverConfig, SolverTrace, StopReason, TrainingMatrix,
};
use crate::proxops::{ridge_dictionary_update, shrink, BisectionConfig, SpectralEstimator, TAU_SAFETY};

/// A problem `min h₀ s.t. hᵢ ≤ 0` given through evaluation callbacks.
///
/// Index 0 is the objective, indices `1..=m` the constraints. The convex parts
/// default to zero; implementors that override one of the `convex_*` methods
/// should override all of them and [`has_convex_part`](Self::has_convex_part).
pub trait ScaProblem {
    fn dim(&self) -> usize;
    /// Number of constraints `m`.
    fn num_constraints(&self) -> usize;
    fn smooth_value(&self, i: usize, x: ArrayView1<f64>) -> f64;
    fn smooth_gradient(&self, i: usize, x: ArrayView1<f64>) -> Array1<f64>;

    fn convex_value(&self, _i: usize, _x: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn convex_subgradient(&self, _i: usize, x: ArrayView1<f64>) -> Array1<f64> {
        Array1::zeros(x.len())
    }

    /// `argmin_z step·gᵢ(z) + ½‖z − v‖²`. Must accept `step = ∞` and then
    /// return a minimizer of `gᵢ`.
    fn convex_prox(&self, _i: usize, v: ArrayView1<f64>, _step: f64) -> Array1<f64> {
        v.to_owned()
    }

    fn has_convex_part(&self, _i: usize) -> bool {
        false
    }

    /// `hᵢ(x) = fᵢ(x) + gᵢ(x)`.
    fn value(&self, i: usize, x: ArrayView1<f64>) -> f64 {
        self.smooth_value(i, x) + self.convex_value(i, x)
    }
}

/// Builder of convex surrogates `f̃ᵢ(·, y)` for the smooth parts, together
/// with a solver for the resulting convex subproblem.
pub trait ApproximationFamily<P: ScaProblem + ?Sized> {
    /// `f̃ᵢ(x, y)`.
    fn surrogate_value(&self, p: &P, i: usize, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64;

    /// Gradient of `f̃ᵢ(·, y)` at `x`.
    fn surrogate_gradient(&self, p: &P, i: usize, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Array1<f64>;

    /// `argmin f̃₀(x, y) + g₀(x)  s.t.  f̃ᵢ(x, y) + gᵢ(x) ≤ 0`.
    fn solve_subproblem(&self, p: &P, y: ArrayView1<f64>) -> Result<Array1<f64>>;

    /// Smallest value found for `maxᵢ f̃ᵢ(x, y) + gᵢ(x)` over `x`, or `None`
    /// when the probe cannot tell. The default runs `probes` subgradient steps.
    fn min_max_surrogate(&self, p: &P, y: ArrayView1<f64>, probes: usize) -> Option<f64> {
        subgradient_probe(self, p, y, probes)
    }
}

fn max_surrogate<P, F>(fam: &F, p: &P, x: ArrayView1<f64>, y: ArrayView1<f64>) -> (f64, usize)
where
    P: ScaProblem + ?Sized,
    F: ApproximationFamily<P> + ?Sized,
{
    let mut best = (f64::NEG_INFINITY, 1);
    for i in 1..=p.num_constraints() {
        let v = fam.surrogate_value(p, i, x, y) + p.convex_value(i, x);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

fn subgradient_probe<P, F>(fam: &F, p: &P, y: ArrayView1<f64>, probes: usize) -> Option<f64>
where
    P: ScaProblem + ?Sized,
    F: ApproximationFamily<P> + ?Sized,
{
    if p.num_constraints() == 0 {
        return Some(f64::NEG_INFINITY);
    }
    let scale = 1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut x = y.to_owned();
    let (mut best, _) = max_surrogate(fam, p, x.view(), y);
    for t in 0..probes {
        let (_, i) = max_surrogate(fam, p, x.view(), y);
        let g = fam.surrogate_gradient(p, i, x.view(), y) + p.convex_subgradient(i, x.view());
        let norm = g.dot(&g).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        let step = scale / ((t + 1) as f64).sqrt();
        x.scaled_add(-step / norm, &g);
        let (v, _) = max_surrogate(fam, p, x.view(), y);
        if v.is_finite() {
            best = best.min(v);
        }
    }
    best.is_finite().then_some(best)
}

/// Quadratic upper bounds `f̃ᵢ(x, y) = fᵢ(y) + ⟨∇fᵢ(y), x − y⟩ + (Lᵢ/2)‖x − y‖²`.
///
/// Valid whenever `Lᵢ` bounds the Lipschitz constant of `∇fᵢ`. The subproblem
/// solver handles `m = 0` (one prox step) and `m = 1` with a purely smooth
/// constraint (bisection on the Lagrange multiplier).
#[derive(Debug, Clone)]
pub struct QuadraticUpperBound {
    /// `L₀, L₁, …, L_m`.
    pub curvature: Vec<f64>,
    pub bisection: BisectionConfig,
}

impl QuadraticUpperBound {
    pub fn new(curvature: Vec<f64>) -> Result<Self> {
        if curvature.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidArgument("curvatures must be finite and non-negative".into()));
        }
        Ok(Self {
            curvature,
            bisection: BisectionConfig::default(),
        })
    }

    fn curvature_of(&self, i: usize) -> Result<f64> {
        self.curvature
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no curvature given for function {i}")))
    }
}

impl<P: ScaProblem + ?Sized> ApproximationFamily<P> for QuadraticUpperBound {
    fn surrogate_value(&self, p: &P, i: usize, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        let l = self.curvature.get(i).copied().unwrap_or(f64::NAN);
        let d = &x - &y;
        p.smooth_value(i, y) + p.smooth_gradient(i, y).dot(&d) + 0.5 * l * d.dot(&d)
    }

    fn surrogate_gradient(&self, p: &P, i: usize, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Array1<f64> {
        let l = self.curvature.get(i).copied().unwrap_or(f64::NAN);
        p.smooth_gradient(i, y) + (&x - &y) * l
    }

    fn solve_subproblem(&self, p: &P, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        match p.num_constraints() {
            0 => {
                let l0 = self.curvature_of(0)?;
                if l0 <= 0.0 {
                    return Err(Error::Unsupported("objective curvature must be positive when m = 0".into()));
                }
                let b0 = &y - &(p.smooth_gradient(0, y) / l0);
                Ok(p.convex_prox(0, b0.view(), 1.0 / l0))
            }
            1 => self.solve_single_constraint(p, y),
            m => Err(Error::Unsupported(format!(
                "quadratic-upper-bound subproblem solver handles at most one constraint, got {m}"
            ))),
        }
    }

    fn min_max_surrogate(&self, p: &P, y: ArrayView1<f64>, probes: usize) -> Option<f64> {
        if p.num_constraints() == 1 && !p.has_convex_part(1) {
            let l1 = self.curvature.get(1).copied()?;
            let g = p.smooth_gradient(1, y);
            let gg = g.dot(&g);
            let f = p.smooth_value(1, y);
            return Some(if l1 > 0.0 {
                f - gg / (2.0 * l1)
            } else if gg > 0.0 {
                f64::NEG_INFINITY
            } else {
                f
            });
        }
        subgradient_probe(self, p, y, probes)
    }
}

impl QuadraticUpperBound {
    /// `min (L₀/2)‖x − b₀‖² + g₀(x)  s.t.  (L₁/2)‖x − b₁‖² ≤ c`, solved as
    /// `x(μ) = prox_{g₀/(L₀+μL₁)}((L₀b₀ + μL₁b₁)/(L₀ + μL₁))` with μ bisected
    /// until the constraint is active. Returns the feasible end of the bracket.
    fn solve_single_constraint<P: ScaProblem + ?Sized>(&self, p: &P, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        if p.has_convex_part(1) {
            return Err(Error::Unsupported("constraint with a non-smooth part".into()));
        }
        let (l0, l1) = (self.curvature_of(0)?, self.curvature_of(1)?);
        if l1 <= 0.0 {
            return Err(Error::Unsupported("constraint curvature must be positive".into()));
        }
        let g0 = p.smooth_gradient(0, y);
        let g1 = p.smooth_gradient(1, y);
        let b0 = if l0 > 0.0 { &y - &(&g0 / l0) } else { y.to_owned() };
        let b1 = &y - &(&g1 / l1);
        let at = |mu: f64| -> Array1<f64> {
            let denom = l0 + mu * l1;
            if denom == 0.0 {
                return p.convex_prox(0, b1.view(), f64::INFINITY);
            }
            let c = (&b0 * l0 + &b1 * (mu * l1)) / denom;
            p.convex_prox(0, c.view(), 1.0 / denom)
        };
        let constraint = |x: &Array1<f64>| self.surrogate_value(p, 1, x.view(), y);

        let x0 = at(0.0);
        if constraint(&x0) <= 0.0 {
            return Ok(x0);
        }
        let cfg = &self.bisection;
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut x_hi = at(hi);
        let mut grown = 0;
        while constraint(&x_hi) > 0.0 {
            grown += 1;
            if grown > cfg.max_iters || !hi.is_finite() {
                return Err(Error::Infeasible(
                    "surrogate constraint has no feasible point reachable by the multiplier search".into(),
                ));
            }
            lo = hi;
            hi *= cfg.bracket_growth;
            x_hi = at(hi);
        }
        for _ in 0..cfg.max_iters {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let x_mid = at(mid);
            if constraint(&x_mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
                x_hi = x_mid;
            }
        }
        Ok(x_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaConfig {
    /// Step γ ∈ (0, 1] toward the subproblem solution.
    pub gamma: f64,
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    /// Subgradient steps used by [`check_slater`] when no closed form exists.
    pub slater_probe_count: usize,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            max_iters: 1000,
            rel_obj_tol: 1e-10,
            slater_probe_count: 200,
        }
    }
}

impl ScaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.rel_obj_tol >= 0.0) {
            return Err(Error::InvalidArgument("rel_obj_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tolerance on `hᵢ(x₀)` accepted as feasible by [`sca_solve`].
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Runs successive convex approximation from the feasible point `x0`.
///
/// The trace records `h₀` at every iterate.
pub fn sca_solve<P, F>(p: &P, fam: &F, x0: ArrayView1<f64>, cfg: &ScaConfig) -> Result<(Array1<f64>, SolverTrace)>
where
    P: ScaProblem + ?Sized,
    F: ApproximationFamily<P> + ?Sized,
{
    cfg.validate()?;
    if x0.len() != p.dim() {
        return Err(shape_err(format!("starting point has length {}, expected {}", x0.len(), p.dim())));
    }
    for i in 1..=p.num_constraints() {
        let h = p.value(i, x0);
        if !(h <= FEASIBILITY_TOL) {
            return Err(Error::Infeasible(format!("starting point violates constraint {i}: h = {h}")));
        }
    }
    let mut x = x0.to_owned();
    let mut h0 = p.value(0, x.view());
    let mut trace = SolverTrace::start(h0);
    for iteration in 1..=cfg.max_iters {
        let x_hat = fam.solve_subproblem(p, x.view())?;
        if x_hat.len() != x.len() {
            return Err(shape_err("subproblem solution has the wrong length"));
        }
        x = if cfg.gamma == 1.0 {
            x_hat
        } else {
            &x_hat * cfg.gamma + &x * (1.0 - cfg.gamma)
        };
        let h_new = p.value(0, x.view());
        trace.objective_history.push(h_new);
        trace.iterations = iteration;
        if !h_new.is_finite() {
            return Err(Error::Diverged {
                iteration,
                trace: Box::new(trace),
            });
        }
        let done = (h0 - h_new).abs() <= cfg.rel_obj_tol * h0.abs().max(1.0);
        h0 = h_new;
        if done {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok((x, trace))
}

/// Value below which a probed surrogate maximum counts as strictly feasible.
pub const SLATER_MARGIN: f64 = -1e-10;

/// Whether the surrogate constraints anchored at `x` admit a strictly
/// feasible point. Unconstrained problems always qualify; an inconclusive
/// probe reports `false`.
pub fn check_slater<P, F>(p: &P, fam: &F, x: ArrayView1<f64>, cfg: &ScaConfig) -> bool
where
    P: ScaProblem + ?Sized,
    F: ApproximationFamily<P> + ?Sized,
{
    if p.num_constraints() == 0 {
        return true;
    }
    if x.len() != p.dim() {
        return false;
    }
    fam.min_max_surrogate(p, x, cfg.slater_probe_count)
        .is_some_and(|v| v < SLATER_MARGIN)
}

/// Largest deviations observed when sampling the surrogate contract.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    /// `max |f̃ᵢ(y, y) − fᵢ(y)|`.
    pub value_gap: f64,
    /// `max ‖∇f̃ᵢ(·, y)(y) − ∇fᵢ(y)‖∞` using the family's analytic gradient.
    pub gradient_gap: f64,
    /// Same as `gradient_gap` but with central differences of `f̃ᵢ(·, y)`.
    pub fd_gradient_gap: f64,
    /// `max (fᵢ(x) − f̃ᵢ(x, y))₊` over all sampled pairs.
    pub upper_bound_violation: f64,
}

/// Samples value consistency, gradient consistency and the upper-bound
/// property of `fam` over all ordered pairs drawn from `points`.
pub fn check_assumption1<P, F>(p: &P, fam: &F, points: &[Array1<f64>], fd_step: f64) -> Assumption1Report
where
    P: ScaProblem + ?Sized,
    F: ApproximationFamily<P> + ?Sized,
{
    let mut rep = Assumption1Report::default();
    for i in 0..=p.num_constraints() {
        for y in points {
            let y = y.view();
            let f = p.smooth_value(i, y);
            rep.value_gap = rep.value_gap.max((fam.surrogate_value(p, i, y, y) - f).abs());
            let g = p.smooth_gradient(i, y);
            let sg = fam.surrogate_gradient(p, i, y, y);
            let gap = (&sg - &g).iter().fold(0.0_f64, |m, d| m.max(d.abs()));
            rep.gradient_gap = rep.gradient_gap.max(gap);
            let mut probe = y.to_owned();
            for j in 0..y.len() {
                let orig = probe[j];
                probe[j] = orig + fd_step;
                let up = fam.surrogate_value(p, i, probe.view(), y);
                probe[j] = orig - fd_step;
                let down = fam.surrogate_value(p, i, probe.view(), y);
                probe[j] = orig;
                let fd = (up - down) / (2.0 * fd_step);
                rep.fd_gradient_gap = rep.fd_gradient_gap.max((fd - g[j]).abs());
            }
            for x in points {
                let viol = p.smooth_value(i, x.view()) - fam.surrogate_value(p, i, x.view(), y);
                rep.upper_bound_violation = rep.upper_bound_violation.max(viol);
            }
        }
    }
    rep
}

/// The X-block of the constrained-fit problem with the dictionary fixed:
/// `min ‖X‖₁ s.t. ½‖Y − AX‖²_F − α ≤ 0`, over `x = vec(X)` in row-major order.
#[derive(Debug, Clone)]
pub struct ConstrainedFitXProblem {
    y: Array2<f64>,
    a: Array2<f64>,
    alpha: f64,
}

impl ConstrainedFitXProblem {
    pub fn new(y: ArrayView2<f64>, a: ArrayView2<f64>, alpha: f64) -> Result<Self> {
        if y.nrows() != a.nrows() {
            return Err(shape_err(format!("Y is {:?} but A is {:?}", y.dim(), a.dim())));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            y: y.to_owned(),
            a: a.to_owned(),
            alpha,
        })
    }

    pub fn to_matrix(&self, x: ArrayView1<f64>) -> Array2<f64> {
        x.to_owned()
            .into_shape_with_order((self.a.ncols(), self.y.ncols()))
            .expect("length matches k·N")
    }

    pub fn to_vector(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.iter().copied().collect()
    }

    /// Lipschitz bound for the gradient of the fit constraint: `σ²_max(A)`.
    pub fn fit_curvature(&self) -> f64 {
        SpectralEstimator::default().estimate(self.a.view()) * TAU_SAFETY
    }

    fn residual_of(&self, x: ArrayView1<f64>) -> Array2<f64> {
        residual(self.y.view(), self.a.view(), self.to_matrix(x).view())
    }
}

impl ScaProblem for ConstrainedFitXProblem {
    fn dim(&self) -> usize {
        self.a.ncols() * self.y.ncols()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn smooth_value(&self, i: usize, x: ArrayView1<f64>) -> f64 {
        match i {
            0 => 0.0,
            _ => 0.5 * frobenius_sq(self.residual_of(x).view()) - self.alpha,
        }
    }

    fn smooth_gradient(&self, i: usize, x: ArrayView1<f64>) -> Array1<f64> {
        match i {
            0 => Array1::zeros(x.len()),
            _ => {
                let g = self.a.t().dot(&self.residual_of(x));
                self.to_vector(g.view())
            }
        }
    }

    fn convex_value(&self, i: usize, x: ArrayView1<f64>) -> f64 {
        match i {
            0 => x.iter().map(|v| v.abs()).sum(),
            _ => 0.0,
        }
    }

    fn convex_subgradient(&self, i: usize, x: ArrayView1<f64>) -> Array1<f64> {
        match i {
            0 => x.mapv(f64::signum),
            _ => Array1::zeros(x.len()),
        }
    }

    fn convex_prox(&self, i: usize, v: ArrayView1<f64>, step: f64) -> Array1<f64> {
        match i {
            0 => v.mapv(|u| shrink(u, step)),
            _ => v.to_owned(),
        }
    }

    fn has_convex_part(&self, i: usize) -> bool {
        i == 0
    }
}

/// `argmin ‖X‖₁ s.t. ‖X − B‖²_F ≤ r²`.
///
/// Zero when `‖B‖_F ≤ r`. Otherwise the solution is `S_t(B)` where the
/// threshold `t` solves `Σ min(|bᵢⱼ|, t)² = r²`; `t` is bisected until the
/// bracket collapses and the feasible (lower) end is returned.
pub fn solve_l1_over_ball(b: ArrayView2<f64>, radius_sq: f64, cfg: &BisectionConfig) -> Result<Array2<f64>> {
    if !(radius_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius_sq must be non-negative, got {radius_sq}")));
    }
    cfg.validate()?;
    if frobenius_sq(b) <= radius_sq {
        return Ok(Array2::zeros(b.raw_dim()));
    }
    let moved = |t: f64| -> f64 { b.iter().map(|v| v.abs().min(t).powi(2)).sum() };
    let mut lo = 0.0_f64;
    let mut hi = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for _ in 0..cfg.max_iters.max(64) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = moved(mid);
        if d > radius_sq {
            hi = mid;
        } else {
            lo = mid;
            if radius_sq - d <= cfg.tol * radius_sq.max(f64::MIN_POSITIVE) && hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
    }
    Ok(b.mapv(|v| shrink(v, lo)))
}

/// Per-iteration snapshot of the constrained-fit learner.
#[derive(Debug)]
pub struct ConstrainedFitRecord<'a> {
    pub iteration: usize,
    pub dictionary: ArrayView2<'a, f64>,
    pub codes: ArrayView2<'a, f64>,
    /// `½‖Y − AX‖²_F`.
    pub fit: f64,
    /// `‖X‖₁`.
    pub l1: f64,
}

/// Learns `(A, X)` for `min ‖X‖₁ s.t. ½‖Y − AX‖²_F ≤ α, ‖A‖²_F ≤ β`.
///
/// See [`solve_constrained_fit_observed`].
pub fn solve_constrained_fit(
    y: &TrainingMatrix,
    k: usize,
    alpha: f64,
    regime: &ConstraintRegime,
    cfg: &SolverConfig,
) -> Result<BsumResult> {
    solve_constrained_fit_observed(y, k, alpha, regime, cfg, None, |_| {})
}

/// Constrained-fit learner with an optional starting dictionary and a
/// per-iteration observer.
///
/// A feasible `X` is first found by running the total-norm learner with
/// `λ = 0` until `½‖Y − AX‖²_F ≤ α(1 − 10⁻³)` (skipped when `X = 0` already
/// fits). Then the X-step minimizes `‖X‖₁` under the quadratic upper bound of
/// the fit at the current codes, and the A-step is the exact ridge update.
/// The trace records `‖X‖₁`; `stationarity_residual` is the relative
/// distance between `X` and the X-step map at the returned point.
pub fn solve_constrained_fit_observed<F>(
    y: &TrainingMatrix,
    k: usize,
    alpha: f64,
    regime: &ConstraintRegime,
    cfg: &SolverConfig,
    init_dictionary: Option<Array2<f64>>,
    mut observer: F,
) -> Result<BsumResult>
where
    F: FnMut(&ConstrainedFitRecord<'_>),
{
    let beta = match regime {
        ConstraintRegime::TotalNorm { beta } => *beta,
        other => {
            return Err(Error::Unsupported(format!(
                "constrained fit is implemented for the total-norm regime, got case {}",
                other.case_number()
            )))
        }
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let yv = y.view();
    let bootstrap_cfg = SolverConfig { lambda: 0.0, ..cfg.clone() };
    let mut problem = BsumProblem::new(y.clone(), k, regime.clone(), bootstrap_cfg);
    if let Some(a0) = init_dictionary {
        problem = problem.with_init_dictionary(a0);
    }
    let bisection = problem.bisection;

    let zero_fit = 0.5 * frobenius_sq(yv);
    let (mut a, mut x) = if zero_fit <= alpha {
        problem.regime.validate(Some(k))?;
        problem.config.validate()?;
        (initial_dictionary(&problem)?, Array2::zeros((k, y.signal_count())))
    } else {
        let target = alpha * (1.0 - 1e-3);
        let boot = solve_until(&problem, |rec| rec.objective <= target)?;
        let achieved = boot.trace.final_objective();
        if achieved > alpha {
            return Err(Error::FitUnreachable { achieved, alpha });
        }
        (boot.dictionary.into_inner(), boot.codes.into_inner())
    };

    let mut l1 = l1_norm(x.view());
    let mut trace = SolverTrace::start(l1);
    let mut estimator = SpectralEstimator::default();
    for iteration in 1..=cfg.max_iters {
        let tau0 = (estimator.estimate(a.view()) * TAU_SAFETY).max(cfg.tau_floor);
        let (x_step, tau) = constrained_code_step(yv, a.view(), x.view(), alpha, tau0, &bisection)?;
        let x_new = if l1_norm(x_step.view()) <= l1 { x_step } else { x.clone() };

        let r_old = residual(yv, a.view(), x_new.view());
        let ridge = ridge_dictionary_update(yv, x_new.view(), beta, cfg.tau_floor, &bisection)?;
        let r_ridge = residual(yv, ridge.dictionary.view(), x_new.view());
        let (a_new, r_new) = if frobenius_sq(r_ridge.view()) <= frobenius_sq(r_old.view()) {
            (ridge.dictionary, r_ridge)
        } else {
            (a.clone(), r_old)
        };

        let l1_new = l1_norm(x_new.view());
        let fit_new = 0.5 * frobenius_sq(r_new.view());
        observer(&ConstrainedFitRecord {
            iteration,
            dictionary: a_new.view(),
            codes: x_new.view(),
            fit: fit_new,
            l1: l1_new,
        });
        trace.tau_x_history.push(tau);
        trace.objective_history.push(l1_new);
        trace.iterations = iteration;
        let done = (l1 - l1_new).abs() <= cfg.rel_obj_tol * l1.max(1.0);
        a = a_new;
        x = x_new;
        l1 = l1_new;
        if done {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }

    let tau = (estimator.estimate(a.view()) * TAU_SAFETY).max(cfg.tau_floor);
    let (x_map, _) = constrained_code_step(yv, a.view(), x.view(), alpha, tau, &bisection)?;
    let stationarity_residual =
        frobenius_sq((&x_map - &x).view()).sqrt() / (1.0 + frobenius_sq(x.view()).sqrt());
    Ok(BsumResult {
        dictionary: Dictionary::new(a, regime.clone())?,
        codes: CodeMatrix::new(x)?,
        trace,
        stationarity_residual,
    })
}

/// `argmin ‖X‖₁` subject to the quadratic upper bound of `½‖Y − AX‖²_F` at
/// `x_bar` being at most α. τ is doubled if the bound turns out not to
/// majorize the fit at the candidate.
fn constrained_code_step(
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    x_bar: ArrayView2<f64>,
    alpha: f64,
    tau: f64,
    cfg: &BisectionConfig,
) -> Result<(Array2<f64>, f64)> {
    let r = residual(y, a, x_bar);
    let d1 = 0.5 * frobenius_sq(r.view());
    let g = a.t().dot(&r);
    let gg = frobenius_sq(g.view());
    let mut tau = tau;
    for _ in 0..64 {
        let b = &x_bar - &(&g / tau);
        let radius_sq = (2.0 * (alpha - d1) / tau + gg / (tau * tau)).max(0.0);
        let x = solve_l1_over_ball(b.view(), radius_sq, cfg)?;
        let fit = 0.5 * frobenius_sq(residual(y, a, x.view()).view());
        if fit <= alpha {
            return Ok((x, tau));
        }
        tau *= 2.0;
    }
    Ok((x_bar.to_owned(), tau))
}
