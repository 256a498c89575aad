//! Small dense linear-algebra kernels shared by the solvers.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Neumaier-compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Squared Frobenius norm, compensated.
pub fn frobenius_sq(m: ArrayView2<f64>) -> f64 {
    compensated_sum(m.iter().map(|v| v * v))
}

pub fn l1_norm(m: ArrayView2<f64>) -> f64 {
    compensated_sum(m.iter().map(|v| v.abs()))
}

/// Frobenius inner product.
pub fn inner(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    compensated_sum(a.iter().zip(b.iter()).map(|(x, y)| x * y))
}

/// Gram matrix of the smaller side: `M Mᵀ` when `M` is wide, `Mᵀ M` otherwise.
/// Both share the nonzero spectrum `σᵢ²(M)`.
pub fn small_gram(m: ArrayView2<f64>) -> Array2<f64> {
    if m.nrows() <= m.ncols() {
        m.dot(&m.t())
    } else {
        m.t().dot(&m)
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// when a pivot falls below `n·ε·max(diag)`.
pub fn cholesky(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let scale = a.diag().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (n.max(1) as f64) * f64::EPSILON * scale;
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for p in 0..j {
            d -= l[[j, p]] * l[[j, p]];
        }
        if !(d > floor) || scale == 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for p in 0..j {
                s -= l[[i, p]] * l[[j, p]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ Z = B` column by column.
pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut z = b.to_owned();
    for c in 0..z.ncols() {
        let mut col = z.column_mut(c);
        for i in 0..n {
            let mut s = col[i];
            for p in 0..i {
                s -= l[[i, p]] * col[p];
            }
            col[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for p in (i + 1)..n {
                s -= l[[p, i]] * col[p];
            }
            col[i] = s / l[[i, i]];
        }
    }
    z
}

/// Deterministic start vector: all ones with a small aperiodic ripple, so that
/// it is not exactly orthogonal to structured eigenvectors such as `(1, -1)`.
pub fn rippled_ones(n: usize) -> Array1<f64> {
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.25 * ((i as f64 + 1.0) * 0.618_033_988_749_895).sin());
    let norm = v.dot(&v).sqrt();
    v /= norm;
    v
}

pub fn normalized_ones(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / (n.max(1) as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct PowerResult {
    /// `‖G v‖` for the final unit vector `v`; a lower bound on `λ_max(G)`.
    pub value: f64,
    pub vector: Array1<f64>,
    pub iterations: usize,
}

/// Power iteration on a symmetric positive semidefinite matrix.
///
/// Stops when successive estimates agree to relative `tol` or after
/// `max_iters` products.
pub fn symmetric_power_iteration(
    g: ArrayView2<f64>,
    start: ArrayView1<f64>,
    tol: f64,
    max_iters: usize,
) -> PowerResult {
    let n = g.nrows();
    let mut v = start.to_owned();
    let norm = v.dot(&v).sqrt();
    if n == 0 || norm == 0.0 || !norm.is_finite() {
        return PowerResult {
            value: 0.0,
            vector: normalized_ones(n),
            iterations: 0,
        };
    }
    v /= norm;
    let mut value = 0.0;
    let mut iterations = 0;
    for it in 1..=max_iters.max(1) {
        iterations = it;
        let w = g.dot(&v);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return PowerResult {
                value: 0.0,
                vector: v,
                iterations,
            };
        }
        let prev = value;
        value = wn;
        v = w / wn;
        if (value - prev).abs() <= tol * value {
            break;
        }
    }
    // Re-evaluate on the final vector so `value` and `vector` agree.
    let w = g.dot(&v);
    let value = w.dot(&w).sqrt();
    PowerResult {
        value,
        vector: v,
        iterations,
    }
}

/// Leading singular triplet `(σ, u, v)` of `m` via power iteration on the
/// smaller Gram matrix.
pub fn top_singular_triplet(m: ArrayView2<f64>, tol: f64, max_iters: usize) -> (f64, Array1<f64>, Array1<f64>) {
    let (r, c) = m.dim();
    let g = small_gram(m);
    let start = rippled_ones(g.nrows());
    let pr = symmetric_power_iteration(g.view(), start.view(), tol, max_iters);
    if r <= c {
        let u = pr.vector;
        let mut v = m.t().dot(&u);
        let s = v.dot(&v).sqrt();
        if s > 0.0 {
            v /= s;
        }
        (s, u, v)
    } else {
        let v = pr.vector;
        let mut u = m.dot(&v);
        let s = u.dot(&u).sqrt();
        if s > 0.0 {
            u /= s;
        }
        (s, u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![[1.0, 0.0], [2.0, 1.0], [3.0, -1.0]];
        let l = cholesky(a.view()).unwrap();
        let z = cholesky_solve(&l, b.view());
        let back = a.dot(&z);
        for (x, y) in back.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(cholesky(a.view()).is_none());
        assert!(cholesky(Array2::<f64>::zeros((2, 2)).view()).is_none());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
    }

    #[test]
    fn triplet_of_rank_one() {
        let m = array![[2.0, 4.0], [1.0, 2.0]];
        let (s, u, v) = top_singular_triplet(m.view(), 1e-14, 100);
        assert!((s * s - 25.0).abs() < 1e-10);
        let rec = Array2::from_shape_fn((2, 2), |(i, j)| s * u[i] * v[j]);
        for (x, y) in rec.iter().zip(m.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
