//! Full-reference image quality: PSNR and SSIM at data range 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::Image;

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Decibels; `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
}

impl MetricReport {
    pub fn compute(a: &Image, b: &Image) -> Result<Self> {
        Ok(MetricReport { psnr: psnr(a, b)?, ssim: ssim(a, b)? })
    }
}

fn same_size(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::ShapeMismatch(format!(
            "{}×{} vs {}×{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    same_size(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10·log10(1 / MSE)` over all channels. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * m.log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut g = [0.0; SSIM_WINDOW];
    for (i, v) in g.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = g.iter().sum();
    g.map(|v| v / sum)
}

/// Separable Gaussian filter over all fully contained windows.
fn filter_valid(plane: &[f64], width: usize, height: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..ow {
            horiz[y * ow + x] = g.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = g.iter().enumerate().map(|(k, gk)| gk * horiz[(y + k) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize) -> f64 {
    let g = gaussian_window();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(a, width, height, &g);
    let mu_b = filter_valid(b, width, height, &g);
    let e_aa = filter_valid(&prod(a, a), width, height, &g);
    let e_bb = filter_valid(&prod(b, b), width, height, &g);
    let e_ab = filter_valid(&prod(a, b), width, height, &g);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + C1) * (2.0 * cov + C2);
        let den = (ma * ma + mb * mb + C1) * (var_a + var_b + C2);
        total += num / den;
    }
    total / n as f64
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// computed per channel over valid windows and averaged across channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    same_size(a, b)?;
    if a.width().min(a.height()) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: a.width(), height: a.height() });
    }
    if a == b {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for c in 0..3 {
        sum += ssim_plane(&a.channel(c), &b.channel(c), a.width(), a.height());
    }
    Ok((sum / 3.0).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_rgb(w, h, (0..w * h * 3).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = Image::filled(8, 8, 0.3);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(psnr(&Image::filled(8, 8, 0.0), &Image::filled(8, 8, 1.0)).unwrap(), 0.0, epsilon = 1e-12);
        // Oracle: 10·log10(1 / 0.01) = 20.
        assert_abs_diff_eq!(psnr(&Image::filled(8, 8, 0.5), &Image::filled(8, 8, 0.6)).unwrap(), 20.0, epsilon = 1e-9);
        assert!(psnr(&a, &Image::filled(8, 9, 0.3)).is_err());
    }

    #[test]
    fn psnr_symmetric_and_monotone_in_noise() {
        let base = noise(16, 16, 1);
        let b = noise(16, 16, 2);
        assert_eq!(psnr(&base, &b).unwrap(), psnr(&b, &base).unwrap());
        let gray = Image::filled(16, 16, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let unit: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut last = f64::INFINITY;
        for amp in [0.05, 0.1, 0.2] {
            let noisy = Image::from_rgb(16, 16, unit.iter().map(|u| 0.5 + amp * u).collect()).unwrap();
            let p = psnr(&gray, &noisy).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = noise(20, 16, 4);
        let b = noise(20, 16, 5);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(matches!(ssim(&Image::new(10, 30), &Image::new(10, 30)), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn ssim_constant_patches_match_oracle() {
        // Independent scalar evaluation on constant patches: zero variance, so
        // ssim = (2·0.5·0.6 + C1)/(0.5² + 0.6² + C1).
        let s = ssim(&Image::filled(16, 16, 0.5), &Image::filled(16, 16, 0.6)).unwrap();
        assert_abs_diff_eq!(s, 0.983609244386166, epsilon = 1e-6);
    }

    #[test]
    fn ssim_negative_for_inverted_pattern() {
        let mut data = Vec::new();
        for y in 0..16 {
            for x in 0..16 {
                let v = if (x / 2 + y / 2) % 2 == 0 { 0.1 } else { 0.9 };
                data.extend([v, v, v]);
            }
        }
        let a = Image::from_rgb(16, 16, data.clone()).unwrap();
        let inv = Image::from_rgb(16, 16, data.iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&a, &inv).unwrap() < 0.0);
    }
}
