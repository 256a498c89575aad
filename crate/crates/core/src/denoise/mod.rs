//! Patch-based image denoising with a learned dictionary.
//!
//! The pipeline extracts all overlapping patches of the noisy image, learns a
//! dictionary and sparse codes for them (starting from an overcomplete DCT),
//! and averages the reconstructed patches back together with the noisy image
//! weighted by `β = 30/σ`.

mod dct;
mod image;
mod omp;
mod patches;

use std::time::Instant;

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

pub use dct::overcomplete_dct;
pub use image::{
    add_gaussian_noise, encode_pgm, parse_pgm, psnr, read_pgm, synthetic_piecewise_constant, write_pgm, GrayImage,
    PgmFormat,
};
pub use omp::{ksvd_learn, omp, omp_batch, KsvdResult};
pub use patches::{extract_patches, reassemble, reassemble_patches, PatchConfig};

use crate::bsum::{solve_case2, BsumProblem};
use crate::error::{Error, Result};
use crate::model::{ConstraintRegime, SolverConfig, TrainingMatrix};

/// How the patch dictionary and codes are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// ℓ₁-penalized learning with per-atom norm bounds `‖aᵢ‖ ≤ 1`.
    Alg2,
    /// K-SVD with OMP coding.
    Ksvd,
    /// OMP coding over the fixed overcomplete DCT dictionary.
    Dct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    /// Noise standard deviation.
    pub sigma: f64,
    pub dict_atoms: usize,
    pub mu_slope: f64,
    pub mu_intercept: f64,
    /// Blend weight is `blend_beta_numerator / σ`.
    pub blend_beta_numerator: f64,
    pub learner: Learner,
    /// Outer iterations of the learner.
    pub learn_iters: usize,
    /// OMP atom budget per patch.
    pub omp_budget: usize,
    /// OMP stops once `‖r‖² ≤ patch_dim·(omp_gain·σ)²`.
    pub omp_gain: f64,
    /// Subtract each patch's mean before learning and add it back afterwards.
    /// Without this the ℓ₁ penalty shrinks the large DC coefficient and biases
    /// the whole patch toward zero.
    pub remove_dc: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            sigma: 20.0,
            dict_atoms: 256,
            mu_slope: 0.0015,
            mu_intercept: 0.2,
            blend_beta_numerator: 30.0,
            learner: Learner::Alg2,
            learn_iters: 10,
            omp_budget: 32,
            omp_gain: 1.15,
            remove_dc: true,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.dict_atoms == 0 || self.learn_iters == 0 || self.omp_budget == 0 {
            return Err(Error::InvalidArgument("atom count, iterations and OMP budget must be positive".into()));
        }
        if !(self.blend_beta_numerator >= 0.0) || !(self.omp_gain > 0.0) {
            return Err(Error::InvalidArgument("blend numerator and OMP gain must be non-negative".into()));
        }
        Ok(())
    }

    pub fn blend_beta(&self) -> f64 {
        self.blend_beta_numerator / self.sigma
    }
}

/// `c·(mu_slope·σ + mu_intercept)` where `c` is the mean L2 norm of the
/// patches.
pub fn mu_schedule(sigma: f64, patches: &TrainingMatrix, cfg: &DenoiseConfig) -> Result<f64> {
    let y = patches.view();
    if y.ncols() == 0 {
        return Err(Error::InvalidArgument("no patches".into()));
    }
    let c = y.columns().into_iter().map(|col| col.dot(&col).sqrt()).sum::<f64>() / y.ncols() as f64;
    Ok(c * (cfg.mu_slope * sigma + cfg.mu_intercept))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoiseReport {
    /// PSNR of the noisy input against the reference, when one was given.
    pub psnr_noisy: Option<f64>,
    pub psnr_denoised: Option<f64>,
    pub sigma: f64,
    pub learner: Learner,
    pub iters: usize,
    pub wall_time_ms: u128,
    /// Learner objective per iteration (penalized objective for `alg2`,
    /// squared fit for `ksvd`, empty for `dct`).
    pub objective_trace: Vec<f64>,
    pub mu: f64,
    pub patch_count: usize,
    pub atom_count: usize,
    pub max_atom_norm: f64,
    /// Average number of nonzero coefficients per patch.
    pub mean_nonzeros: f64,
}

/// Denoises `noisy` and, when `reference` is given, reports PSNR before and
/// after.
///
/// μ is computed from the raw noisy patches; with `remove_dc` the learner
/// then works on mean-subtracted patches.
pub fn denoise_image(
    noisy: &GrayImage,
    reference: Option<&GrayImage>,
    cfg: &DenoiseConfig,
    pcfg: &PatchConfig,
) -> Result<(GrayImage, DenoiseReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let raw = extract_patches(noisy, pcfg)?;
    let mu = mu_schedule(cfg.sigma, &raw, cfg)?;
    let (patches, means) = if cfg.remove_dc {
        let means = raw.view().mean_axis(Axis(0)).expect("patches are non-empty");
        let centered = &raw.view() - &means.view().insert_axis(Axis(0));
        (TrainingMatrix::new(centered)?, Some(means))
    } else {
        (raw, None)
    };
    let a0 = overcomplete_dct(pcfg.patch_dim(), cfg.dict_atoms)?;
    let omp_tol = pcfg.patch_dim() as f64 * (cfg.omp_gain * cfg.sigma).powi(2);

    let (a, x, trace, iters) = match cfg.learner {
        Learner::Alg2 => {
            let k = cfg.dict_atoms;
            let config = SolverConfig {
                // The penalized objective here carries ½ on the fit term.
                lambda: mu / 2.0,
                max_iters: cfg.learn_iters,
                ..SolverConfig::default()
            };
            let problem = BsumProblem::new(
                patches.clone(),
                k,
                ConstraintRegime::PerAtomNorm { betas: vec![1.0; k] },
                config,
            )
            .with_init_dictionary(a0.into_inner());
            let res = solve_case2(&problem)?;
            let iters = res.trace.iterations;
            (
                res.dictionary.into_inner(),
                res.codes.into_inner(),
                res.trace.objective_history,
                iters,
            )
        }
        Learner::Ksvd => {
            let res = ksvd_learn(&patches, &a0, cfg.learn_iters, cfg.omp_budget, omp_tol)?;
            (
                res.dictionary.into_inner(),
                res.codes.into_inner(),
                res.fit_after_update,
                cfg.learn_iters,
            )
        }
        Learner::Dct => {
            let x = omp_batch(patches.view(), a0.view(), cfg.omp_budget, omp_tol);
            (a0.into_inner(), x, Vec::new(), 0)
        }
    };

    let mut recon = a.dot(&x);
    if let Some(m) = &means {
        recon += &m.view().insert_axis(Axis(0));
    }
    let clean = reassemble_patches(recon.view(), noisy, pcfg, cfg.blend_beta())?;
    let wall_time_ms = start.elapsed().as_millis();

    let norms: Array1<f64> = a.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
    let nonzeros = x.iter().filter(|v| **v != 0.0).count() as f64 / x.ncols() as f64;
    let (psnr_noisy, psnr_denoised) = match reference {
        Some(r) => (Some(psnr(noisy, r)?), Some(psnr(&clean, r)?)),
        None => (None, None),
    };
    let report = DenoiseReport {
        psnr_noisy,
        psnr_denoised,
        sigma: cfg.sigma,
        learner: cfg.learner,
        iters,
        wall_time_ms,
        objective_trace: trace,
        mu,
        patch_count: x.ncols(),
        atom_count: a.ncols(),
        max_atom_norm: norms.fold(0.0_f64, |m, v| m.max(*v)),
        mean_nonzeros: nonzeros,
    };
    Ok((clean, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn mu_examples() {
        let unit = TrainingMatrix::new(Array2::from_shape_fn((4, 3), |(r, _)| if r == 0 { 1.0 } else { 0.0 })).unwrap();
        let cfg = DenoiseConfig::default();
        assert!((mu_schedule(100.0, &unit, &cfg).unwrap() - 0.35).abs() < 1e-12);
        assert!((mu_schedule(20.0, &unit, &cfg).unwrap() - 0.23).abs() < 1e-12);
        let zero = TrainingMatrix::new(Array2::zeros((4, 3))).unwrap();
        assert_eq!(mu_schedule(20.0, &zero, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = DenoiseConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.sigma = 0.0;
        assert!(cfg.validate().is_err());
    }
}
