//! Closed-form proximal maps and projections onto the dictionary constraint
//! sets, the spectral-norm estimate used for step constants, and the
//! multiplier search behind the exact ridge dictionary update.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{
    cholesky, cholesky_solve, compensated_sum, frobenius_sq, normalized_ones, rippled_ones, small_gram,
    symmetric_power_iteration,
};
use crate::model::ConstraintRegime;

/// Scalar root-finding controls for the multiplier searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Accepted absolute error on the constraint residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Factor applied to the upper bracket end while it is still infeasible.
    pub bracket_growth: f64,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200,
            bracket_growth: 2.0,
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 || !(self.bracket_growth > 1.0) {
            return Err(Error::InvalidArgument(format!("invalid bisection config {self:?}")));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn shrink(v: f64, gamma: f64) -> f64 {
    if v > gamma {
        v - gamma
    } else if v < -gamma {
        v + gamma
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn shrink_nonneg(v: f64, gamma: f64) -> f64 {
    (v - gamma).max(0.0)
}

/// Entrywise soft shrinkage `S_γ(C)`. The dead zone `|C_ij| ≤ γ` is closed.
pub fn soft_shrink(c: ArrayView2<f64>, gamma: f64) -> Result<Array2<f64>> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("shrinkage threshold must be >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(c.to_owned());
    }
    Ok(c.mapv(|v| shrink(v, gamma)))
}

/// Squared largest singular value of `m` by power iteration on its smaller
/// Gram matrix.
///
/// Two deterministic starts are used (normalized all-ones and a rippled
/// variant) and the larger estimate kept, so a start that happens to be
/// orthogonal to the top singular space does not go unnoticed. The all-zero
/// matrix gives 0.
pub fn sigma_max_sq(m: ArrayView2<f64>, tol: f64, max_iters: usize) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = small_gram(m);
    let n = g.nrows();
    let a = symmetric_power_iteration(g.view(), normalized_ones(n).view(), tol, max_iters);
    let b = symmetric_power_iteration(g.view(), rippled_ones(n).view(), tol, max_iters);
    a.value.max(b.value)
}

/// Warm-started σ²_max estimator used inside iterative solvers.
///
/// Keeps the last leading eigenvector of the Gram matrix so consecutive calls
/// on slowly changing matrices converge in a handful of products.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpectralEstimator {
    warm: Option<Array1<f64>>,
}

/// Relative inflation applied to power-iteration estimates before they are
/// used as majorizing step constants.
pub(crate) const TAU_SAFETY: f64 = 1.0 + 1e-6;

impl SpectralEstimator {
    pub(crate) fn estimate(&mut self, m: ArrayView2<f64>) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        let g = small_gram(m);
        let n = g.nrows();
        let start = match &self.warm {
            Some(v) if v.len() == n && v.iter().any(|x| *x != 0.0) => {
                // Blend in a little of the rippled start so a stale vector
                // that became orthogonal to the top space can recover.
                let mut s = v.clone();
                s.scaled_add(1e-3, &rippled_ones(n));
                s
            }
            _ => rippled_ones(n),
        };
        let pr = symmetric_power_iteration(g.view(), start.view(), 1e-13, 2000);
        self.warm = Some(pr.vector);
        pr.value
    }
}

/// Projection onto `{A : ‖A‖²_F ≤ β}` (radial rescaling).
pub fn project_frobenius_ball(a: ArrayView2<f64>, beta: f64) -> Array2<f64> {
    assert!(beta > 0.0, "beta must be positive, got {beta}");
    let sq = frobenius_sq(a);
    if sq <= beta {
        return a.to_owned();
    }
    let scale = (beta / sq).sqrt();
    a.mapv(|v| v * scale)
}

/// Projection onto `{A : ‖aᵢ‖² ≤ βᵢ ∀i}`; each column is rescaled independently.
pub fn project_per_atom_ball(a: ArrayView2<f64>, betas: &[f64]) -> Result<Array2<f64>> {
    if betas.len() != a.ncols() {
        return Err(shape_err(format!("{} bounds for {} columns", betas.len(), a.ncols())));
    }
    let mut out = a.to_owned();
    for (mut col, &beta) in out.columns_mut().into_iter().zip(betas) {
        let sq = compensated_sum(col.iter().map(|v| v * v));
        if sq > beta {
            let scale = (beta / sq).sqrt();
            col.mapv_inplace(|v| v * scale);
        }
    }
    Ok(out)
}

/// Entrywise `max(·, 0)`.
pub fn project_nonneg(m: ArrayView2<f64>) -> Array2<f64> {
    m.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// Projection onto `{A ≥ 0, ‖A‖²_F ≤ β}`: clamp, then rescale.
pub fn project_nonneg_frobenius(a: ArrayView2<f64>, beta: f64) -> Array2<f64> {
    project_frobenius_ball(project_nonneg(a).view(), beta)
}

/// Projection of one column onto `{a ≥ 0, ‖a‖₁ ≤ θ}`, i.e. `[a − ρ1]₊` with
/// the shift `ρ ≥ 0` found by bisection on `[0, max(a)]`.
pub fn project_nonneg_l1_column(a: ArrayView1<f64>, theta: f64, cfg: &BisectionConfig) -> Result<Array1<f64>> {
    assert!(theta > 0.0, "theta must be positive, got {theta}");
    let mass = |rho: f64| compensated_sum(a.iter().map(|v| (v - rho).max(0.0)));
    if mass(0.0) <= theta {
        return Ok(a.mapv(|v| v.max(0.0)));
    }
    // mass(lo) > θ ≥ mass(hi)
    let mut lo = 0.0;
    let mut hi = a.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    for _ in 0..cfg.max_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > theta {
            lo = mid;
        } else {
            hi = mid;
        }
        if theta - mass(hi) <= cfg.tol {
            return Ok(a.mapv(|v| (v - hi).max(0.0)));
        }
    }
    if theta - mass(hi) <= cfg.tol {
        Ok(a.mapv(|v| (v - hi).max(0.0)))
    } else {
        Err(Error::Bisection { lo, hi })
    }
}

/// Column-wise [`project_nonneg_l1_column`].
pub fn project_nonneg_l1_atoms(a: ArrayView2<f64>, theta: f64, cfg: &BisectionConfig) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(a.raw_dim());
    for (src, mut dst) in a.columns().into_iter().zip(out.columns_mut()) {
        dst.assign(&project_nonneg_l1_column(src, theta, cfg)?);
    }
    Ok(out)
}

/// Euclidean projection onto the dictionary set of `regime`.
pub fn project_dictionary(a: ArrayView2<f64>, regime: &ConstraintRegime, cfg: &BisectionConfig) -> Result<Array2<f64>> {
    match regime {
        ConstraintRegime::TotalNorm { beta } => Ok(project_frobenius_ball(a, *beta)),
        ConstraintRegime::PerAtomNorm { betas } => project_per_atom_ball(a, betas),
        ConstraintRegime::NonnegTotalNorm { beta } => Ok(project_nonneg_frobenius(a, *beta)),
        ConstraintRegime::NonnegL1Atom { theta } => project_nonneg_l1_atoms(a, *theta, cfg),
    }
}

/// Output of [`ridge_dictionary_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeUpdate {
    pub dictionary: Array2<f64>,
    /// Lagrange multiplier θ of `‖A‖²_F ≤ β`.
    pub multiplier: f64,
}

struct RidgeSystem {
    gram: Array2<f64>,
    rhs: Array2<f64>,
}

impl RidgeSystem {
    /// `A(θ)` from `(XXᵀ + θI)Aᵀ = XYᵀ`; `None` when the shifted Gram is not
    /// numerically positive definite.
    fn solve(&self, theta: f64) -> Option<Array2<f64>> {
        let mut g = self.gram.clone();
        g.diag_mut().mapv_inplace(|d| d + theta);
        let l = cholesky(g.view())?;
        Some(cholesky_solve(&l, self.rhs.view()).reversed_axes())
    }
}

/// Exact minimizer of `½‖Y − AX‖²_F` over `‖A‖²_F ≤ β`:
/// `A = YXᵀ(XXᵀ + θI)⁻¹` with θ = 0 when that is feasible, otherwise the
/// θ > 0 putting `A` on the sphere, located by bracket growth and bisection.
///
/// When `XXᵀ` is singular the θ = 0 candidate is regularized with `floor`
/// (reported multiplier stays 0). The returned dictionary is always taken from
/// the feasible end of the bracket.
pub fn ridge_dictionary_update(
    y: ArrayView2<f64>,
    x: ArrayView2<f64>,
    beta: f64,
    floor: f64,
    cfg: &BisectionConfig,
) -> Result<RidgeUpdate> {
    if y.ncols() != x.ncols() {
        return Err(shape_err(format!("Y is {:?} but X is {:?}", y.dim(), x.dim())));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let sys = RidgeSystem {
        gram: x.dot(&x.t()),
        rhs: x.dot(&y.t()),
    };
    let solve_at = |theta: f64| -> Result<Array2<f64>> {
        sys.solve(theta)
            .or_else(|| sys.solve(theta.max(floor)))
            .ok_or_else(|| Error::InvalidArgument("ridge system is not positive definite".into()))
    };

    let unconstrained = solve_at(0.0)?;
    if frobenius_sq(unconstrained.view()) <= beta {
        return Ok(RidgeUpdate {
            dictionary: unconstrained,
            multiplier: 0.0,
        });
    }

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut a_hi = solve_at(hi)?;
    let mut grown = 0;
    while frobenius_sq(a_hi.view()) > beta {
        grown += 1;
        if grown > cfg.max_iters {
            return Err(Error::Bisection { lo, hi });
        }
        lo = hi;
        hi *= cfg.bracket_growth;
        a_hi = solve_at(hi)?;
    }

    // ‖A(lo)‖² > β ≥ ‖A(hi)‖². Bisect until the bracket collapses to
    // floating-point resolution; a loose stop leaves the update measurably
    // suboptimal (by ≈ θ·gap) which shows up as objective increases.
    for _ in 0..cfg.max_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let a_mid = solve_at(mid)?;
        let sq = frobenius_sq(a_mid.view());
        if sq > beta {
            lo = mid;
        } else {
            hi = mid;
            a_hi = a_mid;
            if sq == beta {
                break;
            }
        }
    }
    Ok(RidgeUpdate {
        dictionary: a_hi,
        multiplier: hi,
    })
}

/// `P(A − G/τ)` for the gradient-projection dictionary step.
pub(crate) fn gradient_projection_step(
    a: ArrayView2<f64>,
    grad: ArrayView2<f64>,
    tau: f64,
    regime: &ConstraintRegime,
    cfg: &BisectionConfig,
) -> Result<Array2<f64>> {
    let mut moved = a.to_owned();
    Zip::from(&mut moved).and(&grad).for_each(|m, g| *m -= g / tau);
    project_dictionary(moved.view(), regime, cfg)
}
