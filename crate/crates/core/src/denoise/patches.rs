//! Sliding-window patch extraction and the weighted reassembly
//! `S = (βI + Σ RᵀR)⁻¹(βY + Σ Rᵀ A x)`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::image::GrayImage;
use crate::error::{shape_err, Error, Result};
use crate::model::{CodeMatrix, Dictionary, TrainingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub patch_side: usize,
    pub stride: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_side: 8,
            stride: 1,
        }
    }
}

impl PatchConfig {
    pub fn patch_dim(&self) -> usize {
        self.patch_side * self.patch_side
    }

    /// Top-left corners of all fully contained windows, row-major.
    pub fn anchors(&self, height: usize, width: usize) -> Result<Vec<(usize, usize)>> {
        let p = self.patch_side;
        if p == 0 || self.stride == 0 {
            return Err(Error::InvalidArgument("patch side and stride must be positive".into()));
        }
        if p > height || p > width {
            return Err(shape_err(format!("{p}×{p} patches do not fit a {height}×{width} image")));
        }
        let rows = (height - p) / self.stride + 1;
        let cols = (width - p) / self.stride + 1;
        Ok((0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i * self.stride, j * self.stride)))
            .collect())
    }
}

/// One column per window, pixels row-major within the patch.
pub fn extract_patches(img: &GrayImage, cfg: &PatchConfig) -> Result<TrainingMatrix> {
    let anchors = cfg.anchors(img.height(), img.width())?;
    let p = cfg.patch_side;
    let px = img.pixels();
    let mut out = Array2::zeros((cfg.patch_dim(), anchors.len()));
    for (col, &(r0, c0)) in anchors.iter().enumerate() {
        for dr in 0..p {
            for dc in 0..p {
                out[[dr * p + dc, col]] = px[[r0 + dr, c0 + dc]];
            }
        }
    }
    TrainingMatrix::new(out)
}

/// Weighted average of the noisy image and the reconstructed patches
/// `A·X`. Pixels covered by no patch (possible with β = 0 and stride > 1)
/// keep their noisy value.
pub fn reassemble(
    codes: &CodeMatrix,
    a: &Dictionary,
    noisy: &GrayImage,
    cfg: &PatchConfig,
    blend_beta: f64,
) -> Result<GrayImage> {
    if a.view().ncols() != codes.view().nrows() {
        return Err(shape_err(format!(
            "dictionary has {} atoms but codes have {} rows",
            a.view().ncols(),
            codes.view().nrows()
        )));
    }
    let recon = a.view().dot(&codes.view());
    reassemble_patches(recon.view(), noisy, cfg, blend_beta)
}

/// [`reassemble`] with the reconstructed patches given directly.
pub fn reassemble_patches(
    recon: ArrayView2<f64>,
    noisy: &GrayImage,
    cfg: &PatchConfig,
    blend_beta: f64,
) -> Result<GrayImage> {
    if !(blend_beta >= 0.0 && blend_beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("blend weight must be finite and non-negative, got {blend_beta}")));
    }
    if recon.ncols() == 0 {
        return Ok(noisy.clone());
    }
    let anchors = cfg.anchors(noisy.height(), noisy.width())?;
    if recon.nrows() != cfg.patch_dim() || recon.ncols() != anchors.len() {
        return Err(shape_err(format!(
            "expected {}×{} reconstructed patches, got {:?}",
            cfg.patch_dim(),
            anchors.len(),
            recon.dim()
        )));
    }
    let p = cfg.patch_side;
    let y = noisy.pixels();
    let mut acc = y.mapv(|v| blend_beta * v);
    let mut weight = Array2::from_elem(y.raw_dim(), blend_beta);
    for (col, &(r0, c0)) in anchors.iter().enumerate() {
        for dr in 0..p {
            for dc in 0..p {
                acc[[r0 + dr, c0 + dc]] += recon[[dr * p + dc, col]];
                weight[[r0 + dr, c0 + dc]] += 1.0;
            }
        }
    }
    let mut out = acc;
    ndarray::Zip::from(&mut out)
        .and(&weight)
        .and(y)
        .for_each(|o, &w, &yv| *o = if w > 0.0 { *o / w } else { yv });
    GrayImage::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstraintRegime;
    use ndarray::array;

    #[test]
    fn patch_counts() {
        let img = GrayImage::new(Array2::from_shape_fn((3, 3), |(r, c)| (3 * r + c) as f64)).unwrap();
        let cfg = PatchConfig {
            patch_side: 2,
            stride: 1,
        };
        let p = extract_patches(&img, &cfg).unwrap();
        assert_eq!(p.matrix().dim(), (4, 4));
        assert_eq!(p.matrix().column(3).to_vec(), vec![4.0, 5.0, 7.0, 8.0]);

        let img = GrayImage::new(Array2::from_shape_fn((8, 8), |(r, c)| (8 * r + c) as f64)).unwrap();
        let p = extract_patches(&img, &PatchConfig::default()).unwrap();
        assert_eq!(p.matrix().ncols(), 1);
        assert_eq!(p.matrix().column(0).to_vec(), img.pixels().iter().copied().collect::<Vec<_>>());

        let flat = GrayImage::new(Array2::from_elem((10, 12), 7.0)).unwrap();
        let p = extract_patches(&flat, &PatchConfig::default()).unwrap();
        assert_eq!(p.matrix().ncols(), 3 * 5);
        assert!(p.matrix().iter().all(|v| *v == 7.0));

        assert!(extract_patches(&flat, &PatchConfig { patch_side: 11, stride: 1 }).is_err());
    }

    #[test]
    fn reassemble_examples() {
        let noisy = GrayImage::new(Array2::from_elem((2, 2), 100.0)).unwrap();
        let cfg = PatchConfig {
            patch_side: 2,
            stride: 1,
        };
        let empty = reassemble_patches(Array2::zeros((4, 0)).view(), &noisy, &cfg, 1.0).unwrap();
        assert_eq!(empty, noisy);
        let out = reassemble_patches(Array2::zeros((4, 1)).view(), &noisy, &cfg, 1.0).unwrap();
        assert!(out.pixels().iter().all(|v| *v == 50.0));
    }

    #[test]
    fn tiling_round_trip_is_exact() {
        let img = GrayImage::new(Array2::from_shape_fn((4, 6), |(r, c)| (r * 10 + c) as f64)).unwrap();
        let cfg = PatchConfig {
            patch_side: 2,
            stride: 2,
        };
        let patches = extract_patches(&img, &cfg).unwrap();
        let a = Dictionary::new(Array2::eye(4), ConstraintRegime::PerAtomNorm { betas: vec![1.0; 4] }).unwrap();
        let codes = CodeMatrix::new(patches.matrix().clone()).unwrap();
        let noisy = GrayImage::new(Array2::zeros((4, 6))).unwrap();
        let out = reassemble(&codes, &a, &noisy, &cfg, 0.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn uncovered_pixels_keep_noisy_value() {
        let noisy = GrayImage::new(array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
        let cfg = PatchConfig {
            patch_side: 2,
            stride: 2,
        };
        let out = reassemble_patches(Array2::zeros((4, 1)).view(), &noisy, &cfg, 0.0).unwrap();
        assert_eq!(out.pixels()[[0, 0]], 0.0);
        assert_eq!(out.pixels()[[2, 2]], 9.0);
    }
}
