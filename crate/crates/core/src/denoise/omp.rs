//! Orthogonal matching pursuit and the K-SVD dictionary learner.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{shape_err, Result};
use crate::linalg::{cholesky, cholesky_solve, frobenius_sq, top_singular_triplet};
use crate::model::{CodeMatrix, ConstraintRegime, Dictionary, TrainingMatrix};

/// Greedy sparse code of `y` over the columns of `a`.
///
/// Each step adds the atom most correlated with the residual and refits all
/// active coefficients by least squares. Stops after `max_atoms` atoms, when
/// `‖r‖² ≤ residual_tol`, or when the new atom is numerically dependent on
/// the active set.
pub fn omp(y: ArrayView1<f64>, a: ArrayView2<f64>, max_atoms: usize, residual_tol: f64) -> Array1<f64> {
    let k = a.ncols();
    let mut coef = Array1::zeros(k);
    let mut active: Vec<usize> = Vec::new();
    let mut r = y.to_owned();
    let mut solution = Array1::zeros(0);
    while active.len() < max_atoms.min(k) && r.dot(&r) > residual_tol {
        let corr = a.t().dot(&r);
        let pick = corr
            .iter()
            .enumerate()
            .filter(|(j, _)| !active.contains(j))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(j, _)| j);
        let Some(j) = pick else { break };
        if corr[j] == 0.0 {
            break;
        }
        active.push(j);
        let sub = a.select(Axis(1), &active);
        let gram = sub.t().dot(&sub);
        let Some(l) = cholesky(gram.view()) else {
            active.pop();
            break;
        };
        let rhs = sub.t().dot(&y).insert_axis(Axis(1));
        solution = cholesky_solve(&l, rhs.view()).remove_axis(Axis(1));
        r = &y - &sub.dot(&solution);
    }
    for (idx, &j) in active.iter().enumerate() {
        coef[j] = solution[idx];
    }
    coef
}

/// OMP on every column of `y`, in parallel. Columns are independent, so the
/// result does not depend on scheduling.
pub fn omp_batch(y: ArrayView2<f64>, a: ArrayView2<f64>, max_atoms: usize, residual_tol: f64) -> Array2<f64> {
    let cols: Vec<Array1<f64>> = (0..y.ncols())
        .into_par_iter()
        .map(|j| omp(y.column(j), a, max_atoms, residual_tol))
        .collect();
    let mut x = Array2::zeros((a.ncols(), y.ncols()));
    for (j, c) in cols.into_iter().enumerate() {
        x.column_mut(j).assign(&c);
    }
    x
}

#[derive(Debug, Clone)]
pub struct KsvdResult {
    /// Unit-norm atoms.
    pub dictionary: Dictionary,
    /// Codes from a final OMP pass over the learned dictionary.
    pub codes: CodeMatrix,
    /// `‖Y − AX‖²_F` after each coding pass.
    pub fit_after_coding: Vec<f64>,
    /// `‖Y − AX‖²_F` after each atom-update sweep.
    pub fit_after_update: Vec<f64>,
}

/// K-SVD: alternate OMP coding with a sweep of rank-1 atom updates.
///
/// For each atom, the residual restricted to the patches using it (with the
/// atom's contribution added back) is replaced by its best rank-1
/// approximation. An atom used by no patch is replaced by the currently
/// worst-represented patch, normalized. After each sweep, atoms that nearly
/// duplicate another or serve at most three patches are replaced the same way.
pub fn ksvd_learn(
    patches: &TrainingMatrix,
    a0: &Dictionary,
    iters: usize,
    omp_budget: usize,
    residual_tol: f64,
) -> Result<KsvdResult> {
    let y = patches.view();
    if a0.view().nrows() != y.nrows() {
        return Err(shape_err(format!(
            "dictionary atoms have length {}, patches {}",
            a0.view().nrows(),
            y.nrows()
        )));
    }
    let mut a = a0.view().to_owned();
    for mut col in a.columns_mut() {
        let n = col.dot(&col).sqrt();
        if n > 0.0 {
            col.mapv_inplace(|v| v / n);
        }
    }
    let mut fit_after_coding = Vec::with_capacity(iters);
    let mut fit_after_update = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut x = omp_batch(y, a.view(), omp_budget, residual_tol);
        let mut r = &y - &a.dot(&x);
        fit_after_coding.push(frobenius_sq(r.view()));
        update_atoms(&mut a, &mut x, &mut r, y);
        fit_after_update.push(frobenius_sq(r.view()));
        clear_dictionary(&mut a, x.view(), r.view(), y);
    }
    let x = omp_batch(y, a.view(), omp_budget, residual_tol);
    let k = a.ncols();
    Ok(KsvdResult {
        dictionary: Dictionary::new(a, ConstraintRegime::PerAtomNorm { betas: vec![1.0; k] })?,
        codes: CodeMatrix::new(x)?,
        fit_after_coding,
        fit_after_update,
    })
}

/// Atoms whose Gram entry with another atom exceeds this are replaced.
const CLEAR_COHERENCE: f64 = 0.99;
/// Atoms used by at most this many signals are replaced.
const CLEAR_MIN_USERS: usize = 3;

/// Replaces near-duplicate and rarely used atoms by the worst-represented
/// signals, normalized. Runs between sweeps; the next coding pass refits.
fn clear_dictionary(a: &mut Array2<f64>, x: ArrayView2<f64>, r: ArrayView2<f64>, y: ArrayView2<f64>) {
    let mut err: Vec<f64> = r.columns().into_iter().map(|c| c.dot(&c)).collect();
    for j in 0..a.ncols() {
        let users = x.row(j).iter().filter(|v| v.abs() > 1e-7).count();
        let atom = a.column(j);
        let coherent = (0..a.ncols()).any(|i| i != j && a.column(i).dot(&atom) > CLEAR_COHERENCE);
        if !coherent && users > CLEAR_MIN_USERS {
            continue;
        }
        let Some((pos, &worst)) = err.iter().enumerate().max_by(|p, q| p.1.total_cmp(q.1)) else {
            return;
        };
        let norm = y.column(pos).dot(&y.column(pos)).sqrt();
        if !(worst > 0.0) || !(norm > 0.0) {
            return;
        }
        a.column_mut(j).assign(&(&y.column(pos) / norm));
        err[pos] = 0.0;
    }
}

fn update_atoms(a: &mut Array2<f64>, x: &mut Array2<f64>, r: &mut Array2<f64>, y: ArrayView2<f64>) {
    let mut replaced: Vec<usize> = Vec::new();
    for j in 0..a.ncols() {
        let users: Vec<usize> = (0..x.ncols()).filter(|&i| x[[j, i]] != 0.0).collect();
        if users.is_empty() {
            let worst = (0..r.ncols())
                .filter(|i| !replaced.contains(i))
                .map(|i| (i, r.column(i).dot(&r.column(i))))
                .max_by(|p, q| p.1.total_cmp(&q.1));
            if let Some((i, err)) = worst {
                let norm = y.column(i).dot(&y.column(i)).sqrt();
                if err > 0.0 && norm > 0.0 {
                    a.column_mut(j).assign(&(&y.column(i) / norm));
                    replaced.push(i);
                }
            }
            continue;
        }
        let atom = a.column(j).to_owned();
        let mut e = r.select(Axis(1), &users);
        for (c, &i) in users.iter().enumerate() {
            e.column_mut(c).scaled_add(x[[j, i]], &atom);
        }
        let (sigma, u, v) = top_singular_triplet(e.view(), 1e-12, 1000);
        if !(sigma > 0.0) {
            continue;
        }
        a.column_mut(j).assign(&u);
        for (c, &i) in users.iter().enumerate() {
            let coef = sigma * v[c];
            x[[j, i]] = coef;
            let mut col = r.column_mut(i);
            col.assign(&e.column(c));
            col.scaled_add(-coef, &u);
        }
    }
}
