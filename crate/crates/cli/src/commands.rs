use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use sparsedict::bsum::{solve, BsumProblem, BsumResult};
use sparsedict::denoise::{
    add_gaussian_noise, denoise_image, read_pgm, write_pgm, DenoiseConfig, DenoiseReport, GrayImage, Learner,
    PatchConfig, PgmFormat,
};
use sparsedict::hardness::{verify_claims, GraphInstance, MAX_CLAIM_VERTICES};
use sparsedict::model::{ConstraintRegime, SolverConfig, SolverTrace, StopReason, TrainingMatrix};
use sparsedict::rng;
use sparsedict::sca::solve_constrained_fit;

use crate::csv::{read_matrix, write_matrix};
use crate::{
    BenchArgs, ConstrainedFitArgs, DenoiseArgs, DenoiseOptions, HardnessArgs, LearnArgs, LearnerArg, Outcome,
    SolverArgs,
};

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(err)?;
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

fn load_training(path: &Path) -> Result<TrainingMatrix, String> {
    TrainingMatrix::new(read_matrix(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn solver_config(s: &SolverArgs, lambda: f64) -> SolverConfig {
    SolverConfig {
        lambda,
        max_iters: s.max_iters,
        rel_obj_tol: s.tol,
        seed: s.seed,
        ..SolverConfig::default()
    }
}

#[derive(Serialize)]
struct LearnReport<'a> {
    regime: &'a ConstraintRegime,
    config: &'a SolverConfig,
    final_objective: f64,
    stationarity_residual: f64,
    trace: &'a SolverTrace,
}

fn finish_learning(res: &BsumResult, config: &SolverConfig, out: &Path, label: &str) -> Result<Outcome, String> {
    ensure_dir(out)?;
    write_matrix(&out.join("A.csv"), res.dictionary.atoms())?;
    write_matrix(&out.join("X.csv"), res.codes.matrix())?;
    let report = LearnReport {
        regime: res.dictionary.regime(),
        config,
        final_objective: res.trace.final_objective(),
        stationarity_residual: res.stationarity_residual,
        trace: &res.trace,
    };
    write_json(&out.join("trace.json"), &report)?;
    let converged = res.trace.stop_reason == StopReason::Converged;
    println!(
        "{label}: {} after {} iterations, final value {}, stationarity residual {:.3e}",
        if converged { "converged" } else { "stopped at the iteration cap" },
        res.trace.iterations,
        res.trace.final_objective(),
        res.stationarity_residual
    );
    Ok(if converged { Outcome::Success } else { Outcome::MaxIters })
}

pub fn learn(a: LearnArgs) -> Result<Outcome, String> {
    let y = load_training(&a.input)?;
    let k = a.atoms.unwrap_or(y.signal_dim());
    let need_beta = || a.beta.ok_or_else(|| format!("--case {} needs --beta", a.case));
    let regime = match a.case {
        1 => ConstraintRegime::TotalNorm { beta: need_beta()? },
        2 => match (&a.betas, a.beta) {
            (Some(b), _) => ConstraintRegime::PerAtomNorm { betas: b.clone() },
            (None, Some(b)) => ConstraintRegime::PerAtomNorm { betas: vec![b; k] },
            (None, None) => return Err("--case 2 needs --betas or --beta".into()),
        },
        3 => ConstraintRegime::NonnegTotalNorm { beta: need_beta()? },
        _ => ConstraintRegime::NonnegL1Atom {
            theta: a.theta.ok_or("--case 4 needs --theta")?,
        },
    };
    let config = solver_config(&a.solver, a.lambda);
    let problem = BsumProblem::new(y, k, regime, config.clone());
    let res = solve(&problem).map_err(err)?;
    finish_learning(&res, &config, &a.solver.out, "learn")
}

pub fn constrained_fit(a: ConstrainedFitArgs) -> Result<Outcome, String> {
    let y = load_training(&a.input)?;
    let k = a.atoms.unwrap_or(y.signal_dim());
    let regime = ConstraintRegime::TotalNorm { beta: a.beta };
    let config = solver_config(&a.solver, 0.0);
    let res = solve_constrained_fit(&y, k, a.alpha, &regime, &config).map_err(err)?;
    finish_learning(&res, &config, &a.solver.out, "constrained-fit")
}

fn denoise_config(o: &DenoiseOptions, sigma: f64, learner: Learner) -> DenoiseConfig {
    DenoiseConfig {
        sigma,
        dict_atoms: o.atoms,
        learner,
        learn_iters: o.iters,
        remove_dc: !o.keep_dc,
        ..DenoiseConfig::default()
    }
}

fn learner_of(l: LearnerArg) -> Learner {
    match l {
        LearnerArg::Alg2 => Learner::Alg2,
        LearnerArg::Ksvd => Learner::Ksvd,
        LearnerArg::Dct => Learner::Dct,
    }
}

fn patch_config(o: &DenoiseOptions) -> PatchConfig {
    PatchConfig {
        patch_side: o.patch,
        stride: o.stride,
    }
}

fn noisy_copy(clean: &GrayImage, sigma: f64, seed: u64, trial: u64) -> Result<GrayImage, String> {
    add_gaussian_noise(clean, sigma, &mut rng::stream(seed, "denoise/noise", trial)).map_err(err)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.collect::<Option<Vec<f64>>>()?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Serialize)]
struct DenoiseSummary {
    sigma: f64,
    learner: Learner,
    trials: u64,
    seed: u64,
    mean_psnr_noisy: Option<f64>,
    mean_psnr_denoised: Option<f64>,
    runs: Vec<DenoiseReport>,
}

pub fn denoise(a: DenoiseArgs) -> Result<Outcome, String> {
    let image = read_pgm(&a.image).map_err(|e| format!("{}: {e}", a.image.display()))?;
    let learner = learner_of(a.learner);
    let cfg = denoise_config(&a.options, a.sigma, learner);
    let pcfg = patch_config(&a.options);
    let runs: Vec<(GrayImage, GrayImage, DenoiseReport)> = if a.pre_noised {
        let (clean, report) = denoise_image(&image, None, &cfg, &pcfg).map_err(err)?;
        vec![(image, clean, report)]
    } else {
        (0..a.trials)
            .into_par_iter()
            .map(|t| {
                let noisy = noisy_copy(&image, a.sigma, a.seed, t)?;
                let (clean, report) = denoise_image(&noisy, Some(&image), &cfg, &pcfg).map_err(err)?;
                Ok((noisy, clean, report))
            })
            .collect::<Result<_, String>>()?
    };
    ensure_dir(&a.out)?;
    let (noisy0, clean0, _) = &runs[0];
    write_pgm(a.out.join("denoised.pgm"), clean0, PgmFormat::Binary).map_err(err)?;
    if !a.pre_noised {
        write_pgm(a.out.join("noisy.pgm"), noisy0, PgmFormat::Binary).map_err(err)?;
    }
    let reports: Vec<DenoiseReport> = runs.into_iter().map(|(_, _, r)| r).collect();
    let summary = DenoiseSummary {
        sigma: a.sigma,
        learner,
        trials: reports.len() as u64,
        seed: a.seed,
        mean_psnr_noisy: mean(reports.iter().map(|r| r.psnr_noisy)),
        mean_psnr_denoised: mean(reports.iter().map(|r| r.psnr_denoised)),
        runs: reports,
    };
    write_json(&a.out.join("report.json"), &summary)?;
    match (summary.mean_psnr_noisy, summary.mean_psnr_denoised) {
        (Some(n), Some(d)) => println!(
            "sigma {} learner {:?}: mean PSNR noisy {n:.3} dB, denoised {d:.3} dB over {} trial(s)",
            a.sigma, learner, summary.trials
        ),
        _ => println!("sigma {} learner {:?}: denoised image written", a.sigma, learner),
    }
    Ok(Outcome::Success)
}

pub fn hardness(a: HardnessArgs) -> Result<Outcome, String> {
    let text = std::fs::read_to_string(&a.graph).map_err(|e| format!("{}: {e}", a.graph.display()))?;
    let g = GraphInstance::parse(&text).map_err(|e| format!("{}: {e}", a.graph.display()))?;
    if g.vertex_count() > MAX_CLAIM_VERTICES {
        return Err(format!(
            "graph has {} vertices; claim verification supports at most {MAX_CLAIM_VERTICES}",
            g.vertex_count()
        ));
    }
    let report = verify_claims(&g).map_err(err)?;
    let text = serde_json::to_string_pretty(&report).map_err(err)?;
    println!("{text}");
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    if report.all_passed() {
        Ok(Outcome::Success)
    } else {
        eprintln!("at least one claim failed");
        Ok(Outcome::Failed)
    }
}

pub fn bench(a: BenchArgs) -> Result<Outcome, String> {
    let clean = read_pgm(&a.image).map_err(|e| format!("{}: {e}", a.image.display()))?;
    let pcfg = patch_config(&a.options);
    let learners = [Learner::Dct, Learner::Ksvd, Learner::Alg2];
    let mut table = String::from("sigma,noisy_psnr,dct,ksvd,alg2\n");
    for &sigma in &a.sigmas {
        let per_trial: Vec<(f64, [f64; 3])> = (0..a.trials)
            .into_par_iter()
            .map(|t| {
                let noisy = noisy_copy(&clean, sigma, a.seed, t)?;
                let mut out = [0.0; 3];
                let mut noisy_psnr = 0.0;
                for (slot, &learner) in out.iter_mut().zip(&learners) {
                    let cfg = denoise_config(&a.options, sigma, learner);
                    let (_, rep) = denoise_image(&noisy, Some(&clean), &cfg, &pcfg).map_err(err)?;
                    noisy_psnr = rep.psnr_noisy.unwrap_or(f64::NAN);
                    *slot = rep.psnr_denoised.unwrap_or(f64::NAN);
                }
                Ok((noisy_psnr, out))
            })
            .collect::<Result<_, String>>()?;
        let n = per_trial.len() as f64;
        let noisy = per_trial.iter().map(|r| r.0).sum::<f64>() / n;
        let cols: Vec<f64> = (0..3).map(|i| per_trial.iter().map(|r| r.1[i]).sum::<f64>() / n).collect();
        let _ = writeln!(table, "{sigma},{noisy},{},{},{}", cols[0], cols[1], cols[2]);
    }
    ensure_dir(&a.out)?;
    let path = a.out.join("bench.csv");
    std::fs::write(&path, &table).map_err(|e| format!("{}: {e}", path.display()))?;
    print!("{table}");
    Ok(Outcome::Success)
}
