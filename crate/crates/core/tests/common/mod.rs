//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's own solvers; each oracle uses a
//! different algorithm (sorting, golden-section search, dense SVD/solves from
//! nalgebra, alternating projections) from the code under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

pub fn to_na(m: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn max_abs_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn fro_sq(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Minimizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// `argmin_x γ|x| + ½(x − c)²` by scalar search.
pub fn shrink_by_search(c: f64, gamma: f64) -> f64 {
    golden_min(|x| gamma * x.abs() + 0.5 * (x - c).powi(2), c - gamma - 1.0, c + gamma + 1.0)
}

/// Projection onto `{‖v‖² ≤ β}` found as the best feasible radial scaling
/// by scalar search.
pub fn radial_projection_by_search(v: ArrayView2<f64>, beta: f64) -> Array2<f64> {
    let sq = fro_sq(v);
    if sq <= beta {
        return v.to_owned();
    }
    let cmax = (beta / sq).sqrt();
    let c = golden_min(|c| (c - 1.0).powi(2) * sq, 0.0, cmax);
    v.mapv(|x| x * c)
}

/// Sort-based projection onto `{x ≥ 0, Σx ≤ θ}`.
pub fn nonneg_l1_projection_sorted(a: ArrayView1<f64>, theta: f64) -> Array1<f64> {
    let clamped = a.mapv(|v| v.max(0.0));
    if clamped.sum() <= theta {
        return clamped;
    }
    let mut u: Vec<f64> = a.to_vec();
    u.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut rho = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - theta) / (j + 1) as f64;
        if uj - t > 0.0 {
            rho = t;
        }
    }
    a.mapv(|v| (v - rho).max(0.0))
}

/// Exact `argmin ‖X‖₁ s.t. ‖X − B‖² ≤ r²` via sorted magnitudes: the
/// threshold `t` with `Σ min(|bᵢ|, t)² = r²` is solved piecewise.
pub fn l1_over_ball_sorted(b: ArrayView2<f64>, radius_sq: f64) -> Array2<f64> {
    if fro_sq(b) <= radius_sq {
        return Array2::zeros(b.raw_dim());
    }
    let mut mags: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    mags.sort_by(|x, y| y.total_cmp(x));
    // With the j largest entries clipped at t: j·t² + Σ_{i≥j} mᵢ² = r².
    let mut tail: f64 = mags.iter().map(|m| m * m).sum();
    let mut t = 0.0;
    for j in 1..=mags.len() {
        tail -= mags[j - 1] * mags[j - 1];
        let cand_sq = (radius_sq - tail.max(0.0)) / j as f64;
        if cand_sq < 0.0 {
            continue;
        }
        let cand = cand_sq.sqrt();
        let next = mags.get(j).copied().unwrap_or(0.0);
        if cand <= mags[j - 1] && cand >= next {
            t = cand;
            break;
        }
    }
    b.mapv(|v| v.signum() * (v.abs() - t).max(0.0))
}

/// Dykstra's alternating projections onto the intersection of the
/// non-negative orthant and the Frobenius ball.
pub fn nonneg_ball_projection_dykstra(v: ArrayView2<f64>, beta: f64, iters: usize) -> Array2<f64> {
    let mut x = v.to_owned();
    let mut p = Array2::<f64>::zeros(v.raw_dim());
    let mut q = Array2::<f64>::zeros(v.raw_dim());
    for _ in 0..iters {
        let y = (&x + &p).mapv(|t| t.max(0.0));
        p = &x + &p - &y;
        let z = radial_projection_by_search((&y + &q).view(), beta);
        q = &y + &q - &z;
        x = z;
    }
    x
}

/// `σ²_max` from a dense SVD.
pub fn sigma_max_sq_svd(m: ArrayView2<f64>) -> f64 {
    let s = to_na(m).singular_values();
    s.iter().fold(0.0_f64, |acc, v| acc.max(*v)).powi(2)
}

/// `A(θ) = Y Xᵀ (X Xᵀ + θI)⁻¹` by a dense LU solve.
pub fn ridge_solution(y: ArrayView2<f64>, x: ArrayView2<f64>, theta: f64) -> Array2<f64> {
    let xn = to_na(x);
    let yn = to_na(y);
    let k = xn.nrows();
    let g = &xn * xn.transpose() + DMatrix::identity(k, k) * theta;
    let rhs = &xn * yn.transpose();
    let at = g.lu().solve(&rhs).expect("shifted Gram is invertible");
    from_na(&at.transpose())
}

/// `½‖Y − AX‖²_F`.
pub fn fit(y: ArrayView2<f64>, a: ArrayView2<f64>, x: ArrayView2<f64>) -> f64 {
    0.5 * fro_sq((&y - &a.dot(&x)).view())
}

/// Central finite-difference gradient of `f` at `m`.
pub fn fd_gradient(m: ArrayView2<f64>, h: f64, f: impl Fn(ArrayView2<f64>) -> f64) -> Array2<f64> {
    let mut probe = m.to_owned();
    let mut g = Array2::zeros(m.raw_dim());
    for idx in 0..m.len() {
        let (i, j) = (idx / m.ncols(), idx % m.ncols());
        let orig = probe[[i, j]];
        probe[[i, j]] = orig + h;
        let up = f(probe.view());
        probe[[i, j]] = orig - h;
        let down = f(probe.view());
        probe[[i, j]] = orig;
        g[[i, j]] = (up - down) / (2.0 * h);
    }
    g
}
