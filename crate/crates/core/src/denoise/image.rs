//! Grayscale images, PGM files, PSNR and synthetic test images.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{shape_err, Error, Result};

/// Grayscale image with real-valued pixels, nominally in `[0, 255]`.
///
/// Values may leave that range (for example after adding noise); clamping and
/// rounding happen only on export.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: Array2<f64>,
}

impl GrayImage {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(shape_err("image must have at least one pixel"));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("image has non-finite pixels".into()));
        }
        Ok(Self { pixels })
    }

    pub fn from_u8(height: usize, width: usize, data: &[u8]) -> Result<Self> {
        if data.len() != height * width {
            return Err(shape_err(format!("{} bytes for a {height}×{width} image", data.len())));
        }
        let pixels = Array2::from_shape_fn((height, width), |(r, c)| f64::from(data[r * width + c]));
        Self::new(pixels)
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }

    /// Row-major bytes after clamping to `[0, 255]` and rounding.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| v.clamp(0.0, 255.0).round() as u8).collect()
    }

    /// Clamped and rounded copy.
    pub fn quantized(&self) -> GrayImage {
        GrayImage {
            pixels: self.pixels.mapv(|v| v.clamp(0.0, 255.0).round()),
        }
    }
}

/// Peak signal-to-noise ratio `10·log₁₀(255²/MSE)` in dB; `+∞` for identical
/// images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.pixels.dim() != b.pixels.dim() {
        return Err(shape_err(format!("images are {:?} and {:?}", a.pixels.dim(), b.pixels.dim())));
    }
    let sq: f64 = a.pixels.iter().zip(b.pixels.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    let mse = sq / a.pixels.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// `img + σ·N(0, 1)` per pixel, without clipping.
pub fn add_gaussian_noise<R: Rng + ?Sized>(img: &GrayImage, sigma: f64, rng: &mut R) -> Result<GrayImage> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(format!("sigma {sigma}: {e}")))?;
    let pixels = img.pixels.mapv(|v| v + normal.sample(rng));
    GrayImage::new(pixels)
}

/// Seeded piecewise-constant test image: a background level overlaid with a
/// few rectangles and discs of random gray levels in `[30, 225]`.
pub fn synthetic_piecewise_constant<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> Result<GrayImage> {
    if height == 0 || width == 0 {
        return Err(shape_err("image must have at least one pixel"));
    }
    let level = |rng: &mut R| f64::from(rng.random_range(30u32..=225u32));
    let mut pixels = Array2::from_elem((height, width), level(rng));
    let (hf, wf) = (height as f64, width as f64);
    for _ in 0..5 {
        let r0 = rng.random_range(0..height);
        let c0 = rng.random_range(0..width);
        let r1 = (r0 + 1 + rng.random_range(0..height.div_ceil(2))).min(height);
        let c1 = (c0 + 1 + rng.random_range(0..width.div_ceil(2))).min(width);
        let v = level(rng);
        pixels.slice_mut(ndarray::s![r0..r1, c0..c1]).fill(v);
    }
    for _ in 0..3 {
        let cr = rng.random::<f64>() * hf;
        let cc = rng.random::<f64>() * wf;
        let rad = (0.1 + 0.2 * rng.random::<f64>()) * hf.min(wf);
        let v = level(rng);
        for ((r, c), p) in pixels.indexed_iter_mut() {
            if (r as f64 + 0.5 - cr).powi(2) + (c as f64 + 0.5 - cc).powi(2) <= rad * rad {
                *p = v;
            }
        }
    }
    GrayImage::new(pixels)
}

/// PGM flavour used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// `P5`.
    Binary,
    /// `P2`.
    Ascii,
}

/// Parses a `P5` or `P2` PGM with maxval ≤ 255. Pixel values are kept as
/// stored (no rescaling to 255).
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let bad = |message: String| Error::Parse { line: 0, message };

    fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
        while *pos < bytes.len() {
            if bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            } else if bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
    }
    fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
        skip_ws_and_comments(bytes, pos);
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        (start < *pos).then(|| &bytes[start..*pos])
    }
    let number = |tok: Option<&[u8]>, what: &str| -> Result<usize> {
        let tok = tok.ok_or_else(|| bad(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("invalid {what} '{}'", String::from_utf8_lossy(tok))))
    };

    let magic = token(bytes, &mut pos).ok_or_else(|| bad("empty file".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => return Err(bad(format!("unsupported magic '{}'", String::from_utf8_lossy(other)))),
    };
    let width = number(token(bytes, &mut pos), "width")?;
    let height = number(token(bytes, &mut pos), "height")?;
    let maxval = number(token(bytes, &mut pos), "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad(format!("maxval {maxval} not in 1..=255")));
    }
    let count = width * height;
    let data: Vec<u8> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let raster = bytes.get(pos..pos + count).ok_or_else(|| bad("truncated raster".into()))?;
        raster.to_vec()
    } else {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = number(token(bytes, &mut pos), "pixel")?;
            if v > maxval {
                return Err(bad(format!("pixel {v} exceeds maxval {maxval}")));
            }
            out.push(v as u8);
        }
        out
    };
    GrayImage::from_u8(height, width, &data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&std::fs::read(path)?)
}

/// Encodes the clamped, rounded image with maxval 255.
pub fn encode_pgm(img: &GrayImage, format: PgmFormat) -> Vec<u8> {
    let data = img.to_u8();
    let (h, w) = (img.height(), img.width());
    match format {
        PgmFormat::Binary => {
            let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
            out.extend_from_slice(&data);
            out
        }
        PgmFormat::Ascii => {
            let mut out = format!("P2\n{w} {h}\n255\n");
            for row in data.chunks(w) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage, format: PgmFormat) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_pgm(img, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn psnr_examples() {
        let a = GrayImage::new(array![[10.0, 20.0], [30.0, 40.0]]).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let z = GrayImage::new(Array2::zeros((2, 2))).unwrap();
        let f = GrayImage::new(Array2::from_elem((2, 2), 255.0)).unwrap();
        assert!(psnr(&z, &f).unwrap().abs() < 1e-12);
        let small = GrayImage::new(Array2::zeros((1, 2))).unwrap();
        assert!(psnr(&a, &small).is_err());
    }

    #[test]
    fn pgm_round_trip_both_formats() {
        let data: Vec<u8> = (0..=255u8).chain(0..=7u8).collect();
        let img = GrayImage::from_u8(8, 33, &data).unwrap();
        for fmt in [PgmFormat::Binary, PgmFormat::Ascii] {
            let back = parse_pgm(&encode_pgm(&img, fmt)).unwrap();
            assert_eq!(back.to_u8(), data);
        }
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let bytes = b"P2\n# comment\n2 1\n# another\n255\n7 9\n";
        let img = parse_pgm(bytes).unwrap();
        assert_eq!(img.to_u8(), vec![7, 9]);
        assert!(parse_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0").is_err());
        assert!(parse_pgm(b"P2\n1 1\n1000\n5\n").is_err());
    }

    #[test]
    fn export_clamps() {
        let img = GrayImage::new(array![[-5.0, 300.0, 12.4, 12.6]]).unwrap();
        assert_eq!(img.to_u8(), vec![0, 255, 12, 13]);
    }

    #[test]
    fn synthetic_image_is_seeded() {
        let a = synthetic_piecewise_constant(32, 32, &mut rng::stream(3, "img", 0)).unwrap();
        let b = synthetic_piecewise_constant(32, 32, &mut rng::stream(3, "img", 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|v| (30.0..=225.0).contains(v)));
    }
}
