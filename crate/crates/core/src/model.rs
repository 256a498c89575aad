//! Domain types shared by every solver, and the fit function
//! `½‖Y − AX‖²_F + λ‖X‖₁` with its block gradients.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{compensated_sum, frobenius_sq, l1_norm};

fn all_finite(m: ArrayView2<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Column-stacked training signals `Y` (n × N).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMatrix(Array2<f64>);

impl TrainingMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(shape_err(format!("training matrix must be non-empty, got {:?}", data.dim())));
        }
        if !all_finite(data.view()) {
            return Err(Error::InvalidArgument("training matrix has non-finite entries".into()));
        }
        Ok(Self(data))
    }

    /// Signal dimension `n`.
    pub fn signal_dim(&self) -> usize {
        self.0.nrows()
    }

    /// Number of signals `N`.
    pub fn signal_count(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Constraint set for the dictionary (and, in the non-negative regimes, the codes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintRegime {
    /// `‖A‖²_F ≤ β`.
    TotalNorm { beta: f64 },
    /// `‖aᵢ‖² ≤ βᵢ` for every atom.
    PerAtomNorm { betas: Vec<f64> },
    /// `‖A‖²_F ≤ β`, `A ≥ 0`, `X ≥ 0`.
    NonnegTotalNorm { beta: f64 },
    /// `‖aᵢ‖₁ ≤ θ` for every atom, `A ≥ 0`, `X ≥ 0`.
    NonnegL1Atom { theta: f64 },
}

impl ConstraintRegime {
    /// Checks that every bound is strictly positive and, when `atoms` is
    /// given, that per-atom bounds match it.
    pub fn validate(&self, atoms: Option<usize>) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Self::TotalNorm { beta } | Self::NonnegTotalNorm { beta } => positive(*beta, "beta"),
            Self::NonnegL1Atom { theta } => positive(*theta, "theta"),
            Self::PerAtomNorm { betas } => {
                if let Some(k) = atoms {
                    if betas.len() != k {
                        return Err(shape_err(format!("{} per-atom bounds for {k} atoms", betas.len())));
                    }
                }
                if betas.is_empty() {
                    return Err(Error::InvalidArgument("per-atom bounds are empty".into()));
                }
                betas.iter().try_for_each(|b| positive(*b, "beta_i"))
            }
        }
    }

    /// Whether `A ≥ 0` and `X ≥ 0` are part of the constraint set.
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, Self::NonnegTotalNorm { .. } | Self::NonnegL1Atom { .. })
    }

    /// Case number I–IV as an integer.
    pub fn case_number(&self) -> u8 {
        match self {
            Self::TotalNorm { .. } => 1,
            Self::PerAtomNorm { .. } => 2,
            Self::NonnegTotalNorm { .. } => 3,
            Self::NonnegL1Atom { .. } => 4,
        }
    }
}

/// Dictionary `A` (n × k) tagged with the regime it is meant to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Array2<f64>,
    regime: ConstraintRegime,
}

impl Dictionary {
    pub fn new(atoms: Array2<f64>, regime: ConstraintRegime) -> Result<Self> {
        if atoms.ncols() == 0 {
            return Err(shape_err("dictionary needs at least one atom"));
        }
        if !all_finite(atoms.view()) {
            return Err(Error::InvalidArgument("dictionary has non-finite entries".into()));
        }
        Ok(Self { atoms, regime })
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn regime(&self) -> &ConstraintRegime {
        &self.regime
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.atoms
    }
}

/// Sparse-representation coefficients `X` (k × N).
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix(Array2<f64>);

impl CodeMatrix {
    pub fn new(codes: Array2<f64>) -> Result<Self> {
        if !all_finite(codes.view()) {
            return Err(Error::InvalidArgument("code matrix has non-finite entries".into()));
        }
        Ok(Self(codes))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Number of exactly-zero entries.
    pub fn zero_count(&self) -> usize {
        self.0.iter().filter(|v| **v == 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sparsity weight λ.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once `|f_r − f_{r+1}| ≤ rel_obj_tol · max(1, |f_r|)`.
    pub rel_obj_tol: f64,
    /// Lower bound applied to every step constant τ.
    pub tau_floor: f64,
    /// A run only counts as converged once the fixed-point residual of both
    /// block maps is below this value as well.
    pub stationarity_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_iters: 5000,
            rel_obj_tol: 1e-8,
            tau_floor: 1e-8,
            stationarity_tol: 1e-5,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.rel_obj_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_obj_tol must be positive".into()));
        }
        if !(self.tau_floor > 0.0) {
            return Err(Error::InvalidArgument("tau_floor must be positive".into()));
        }
        if !(self.stationarity_tol > 0.0) {
            return Err(Error::InvalidArgument("stationarity_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    /// Objective at the initial point followed by one value per iteration.
    pub objective_history: Vec<f64>,
    pub tau_a_history: Vec<f64>,
    pub tau_x_history: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

impl SolverTrace {
    pub(crate) fn start(initial: f64) -> Self {
        Self {
            objective_history: vec![initial],
            tau_a_history: Vec::new(),
            tau_x_history: Vec::new(),
            iterations: 0,
            stop_reason: StopReason::MaxIters,
        }
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("trace always holds the initial objective")
    }

    /// Largest increase between consecutive objective values (≤ 0 for a
    /// monotone trace).
    pub fn max_increase(&self) -> f64 {
        self.objective_history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_conforming(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<()> {
    if a.nrows() != y.nrows() || a.ncols() != x.nrows() || x.ncols() != y.ncols() {
        return Err(shape_err(format!(
            "Y is {:?}, A is {:?}, X is {:?}",
            y.dim(),
            a.dim(),
            x.dim()
        )));
    }
    Ok(())
}

/// `AX − Y`.
pub(crate) fn residual(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    let mut r = a.dot(&x);
    r -= &y;
    r
}

/// `½‖Y − AX‖²_F + λ‖X‖₁`.
pub fn objective(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>, lambda: f64) -> Result<f64> {
    check_conforming(y, a, x)?;
    Ok(objective_unchecked(y, a, x, lambda))
}

pub(crate) fn objective_unchecked(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>, lambda: f64) -> f64 {
    let r = residual(y, a, x);
    objective_from_residual(r.view(), x, lambda)
}

pub(crate) fn objective_from_residual(r: ArrayView2<f64>, x: ArrayView2<f64>, lambda: f64) -> f64 {
    let fit = 0.5 * frobenius_sq(r);
    if lambda == 0.0 {
        fit
    } else {
        compensated_sum([fit, lambda * l1_norm(x)])
    }
}

/// Smooth part `½‖Y − AX‖²_F`.
pub fn fit(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<f64> {
    objective(y, a, x, 0.0)
}

/// `∇_A ½‖Y − AX‖² = (AX − Y)Xᵀ`.
pub fn grad_a(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_conforming(y, a, x)?;
    Ok(residual(y, a, x).dot(&x.t()))
}

/// `∇_X ½‖Y − AX‖² = Aᵀ(AX − Y)`.
pub fn grad_x(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_conforming(y, a, x)?;
    Ok(a.t().dot(&residual(y, a, x)))
}

/// Whether `(A, X)` satisfies every constraint of `regime` within additive `tol`.
/// Shape disagreements (per-atom bound count, A/X inner dimension) count as infeasible.
pub fn check_feasible(a: ArrayView2<f64>, x: ArrayView2<f64>, regime: &ConstraintRegime, tol: f64) -> bool {
    if a.ncols() != x.nrows() {
        return false;
    }
    let dictionary_ok = match regime {
        ConstraintRegime::TotalNorm { beta } => frobenius_sq(a) <= beta + tol,
        ConstraintRegime::NonnegTotalNorm { beta } => {
            frobenius_sq(a) <= beta + tol && a.iter().all(|v| *v >= -tol)
        }
        ConstraintRegime::PerAtomNorm { betas } => {
            betas.len() == a.ncols()
                && a
                    .columns()
                    .into_iter()
                    .zip(betas)
                    .all(|(col, b)| compensated_sum(col.iter().map(|v| v * v)) <= b + tol)
        }
        ConstraintRegime::NonnegL1Atom { theta } => {
            a.iter().all(|v| *v >= -tol)
                && a
                    .columns()
                    .into_iter()
                    .all(|col| compensated_sum(col.iter().map(|v| v.abs())) <= theta + tol)
        }
    };
    let codes_ok = !regime.is_nonnegative() || x.iter().all(|v| *v >= -tol);
    dictionary_ok && codes_ok
}
