//! PSNR and SSIM on normalized single-channel images.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Value reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn same_dims(a: &Image, b: &Image) -> Result<()> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("images differ in size"))
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// `10·log10(peak²/MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("peak must be positive"));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * libm::log10(peak * peak / m)).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (k, v) in w.iter_mut().enumerate() {
        let x = k as f64 - half;
        *v = libm::exp(-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable "valid" filtering with the Gaussian window.
fn filter_valid(data: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = Vec::with_capacity(h * ow);
    for r in 0..h {
        let line = &data[r * w..(r + 1) * w];
        for c in 0..ow {
            rows.push(taps.iter().zip(&line[c..c + SSIM_WINDOW]).map(|(t, v)| t * v).sum::<f64>());
        }
    }
    let mut out = Vec::with_capacity(oh * ow);
    for r in 0..oh {
        for c in 0..ow {
            out.push((0..SSIM_WINDOW).map(|k| taps[k] * rows[(r + k) * ow + c]).sum::<f64>());
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11×11 Gaussian
/// windows (σ = 1.5, K1 = 0.01, K2 = 0.03, peak 1).
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    same_dims(a, b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { window: SSIM_WINDOW });
    }
    let taps = gaussian_window();
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a.data(), h, w, &taps);
    let mu_b = filter_valid(b.data(), h, w, &taps);
    let e_aa = filter_valid(&prod(|x, _| x * x), h, w, &taps);
    let e_bb = filter_valid(&prod(|_, y| y * y), h, w, &taps);
    let e_ab = filter_valid(&prod(|x, y| x * y), h, w, &taps);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|k| {
            let (ma, mb) = (mu_a[k], mu_b[k]);
            let var_a = e_aa[k] - ma * ma;
            let var_b = e_bb[k] - mb * mb;
            let cov = e_ab[k] - ma * mb;
            ((2.0 * (ma * mb) + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
        })
        .sum();
    Ok(total / n as f64)
}
