use ndarray::Array2;

use crate::error::{shape_err, Result};
use crate::model::{ConstraintRegime, Dictionary};

fn exact_sqrt(v: usize) -> Option<usize> {
    let r = (v as f64).sqrt().round() as usize;
    (r * r == v).then_some(r)
}

/// Separable overcomplete DCT dictionary with `n_atoms` unit-norm atoms of
/// length `n_pixels = p²`.
///
/// The 1-D factor is `D[t][j] = cos(π·j·(t + ½)/m)` (`p × m`, `m² = n_atoms`),
/// with every non-constant column mean-subtracted and each column normalized.
/// Atom `j₁·m + j₂` is the row-major patch `D[·][j₁] ⊗ D[·][j₂]`.
pub fn overcomplete_dct(n_pixels: usize, n_atoms: usize) -> Result<Dictionary> {
    let p = exact_sqrt(n_pixels).ok_or_else(|| shape_err(format!("{n_pixels} pixels is not a square patch")))?;
    let m = exact_sqrt(n_atoms).ok_or_else(|| shape_err(format!("{n_atoms} atoms is not a square count")))?;
    if p == 0 || p > m {
        return Err(shape_err(format!("need 0 < p ≤ m, got p = {p}, m = {m}")));
    }
    let mut d = Array2::from_shape_fn((p, m), |(t, j)| {
        (std::f64::consts::PI * j as f64 * (t as f64 + 0.5) / m as f64).cos()
    });
    for (j, mut col) in d.columns_mut().into_iter().enumerate() {
        if j > 0 {
            let mean = col.mean().unwrap_or(0.0);
            col.mapv_inplace(|v| v - mean);
        }
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    let mut atoms = Array2::zeros((p * p, m * m));
    for j1 in 0..m {
        for j2 in 0..m {
            let idx = j1 * m + j2;
            for t1 in 0..p {
                for t2 in 0..p {
                    atoms[[t1 * p + t2, idx]] = d[[t1, j1]] * d[[t2, j2]];
                }
            }
        }
    }
    Dictionary::new(
        atoms,
        ConstraintRegime::PerAtomNorm {
            betas: vec![1.0; m * m],
        },
    )
}
