//! Image quality metrics and their summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    /// dB, `+∞` for identical images
    pub psnr: f64,
    pub ssim: f64,
    pub mae: f64,
    /// best PSNR over integer global intensity shifts of the candidate
    pub shifted_psnr: f64,
}

fn check_same(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn peak(a: &GrayImage) -> f64 {
    a.bounds().max_f64()
}

fn psnr_from_mse(peak: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_same(a, b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// `10·log10(x_max² / MSE)`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    Ok(psnr_from_mse(peak(a), mse(a, b)?))
}

/// PSNR of a real-valued field against an image, without rounding.
pub fn psnr_field(reference: &GrayImage, field: &[f64]) -> Result<f64> {
    if field.len() != reference.pixels().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values vs {} pixels",
            field.len(),
            reference.pixels().len()
        )));
    }
    let sum: f64 = reference
        .pixels()
        .iter()
        .zip(field)
        .map(|(&x, &y)| (x as f64 - y).powi(2))
        .sum();
    Ok(psnr_from_mse(peak(reference), sum / field.len() as f64))
}

pub fn mae(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_same(a, b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// Best PSNR of `candidate + s` against `reference` over integer shifts
/// `s ∈ [−x_max, x_max]` (no clamping). Returns `(psnr, s)`; ties go to the
/// smallest `|s|`.
pub fn shift_compensated_psnr(reference: &GrayImage, candidate: &GrayImage) -> Result<(f64, i32)> {
    check_same(reference, candidate)?;
    let count = reference.pixels().len() as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (&x, &y) in reference.pixels().iter().zip(candidate.pixels()) {
        let d = y as f64 - x as f64;
        sum += d;
        sum_sq += d * d;
    }
    let limit = reference.bounds().max as i32;
    let mut best = (f64::INFINITY, 0);
    for s in (0..=limit).flat_map(|m| if m == 0 { vec![0] } else { vec![-m, m] }) {
        let sf = s as f64;
        // mean((d + s)²) expanded; sums of integers are exact
        let mse = (sum_sq + 2.0 * sf * sum + sf * sf * count) / count;
        if mse < best.0 {
            best = (mse, s);
        }
    }
    Ok((psnr_from_mse(peak(reference), best.0), best.1))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Separable "valid" filtering with the SSIM window.
fn filter_valid(data: &[f64], width: usize, height: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; height * ow];
    for r in 0..height {
        for c in 0..ow {
            let src = &data[r * width + c..r * width + c + SSIM_WINDOW];
            rows[r * ow + c] = src.iter().zip(w).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..SSIM_WINDOW).map(|t| rows[(r + t) * ow + c] * w[t]).sum();
        }
    }
    out
}

/// Mean SSIM over all full 11×11 windows (Gaussian σ = 1.5, K1 = 0.01,
/// K2 = 0.03, dynamic range from the bit depth).
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_same(a, b)?;
    let (width, height) = (a.width(), a.height());
    if width.min(height) < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width,
            height,
            min: SSIM_WINDOW,
        });
    }
    let range = a.bounds().span();
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let w = gaussian_window();
    let x = a.to_f64();
    let y = b.to_f64();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(&x, width, height, &w);
    let my = filter_valid(&y, width, height, &w);
    let sxx = filter_valid(&xx, width, height, &w);
    let syy = filter_valid(&yy, width, height, &w);
    let sxy = filter_valid(&xy, width, height, &w);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.len() as f64)
}

pub fn score(reference: &GrayImage, candidate: &GrayImage) -> Result<QualityScore> {
    Ok(QualityScore {
        psnr: psnr(reference, candidate)?,
        ssim: ssim(reference, candidate)?,
        mae: mae(reference, candidate)?,
        shifted_psnr: shift_compensated_psnr(reference, candidate)?.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    /// mean over finite values (`+∞` when none are finite)
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub infinite_count: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Stats> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Ok(Stats {
            mean: if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
            median,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            infinite_count: values.len() - finite.len(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub psnr: Stats,
    pub ssim: Stats,
    pub mae: Stats,
    pub shifted_psnr: Stats,
}

pub fn aggregate(scores: &[QualityScore]) -> Result<Summary> {
    let pick = |f: fn(&QualityScore) -> f64| Stats::of(&scores.iter().map(f).collect::<Vec<_>>());
    Ok(Summary {
        count: scores.len(),
        psnr: pick(|s| s.psnr)?,
        ssim: pick(|s| s.ssim)?,
        mae: pick(|s| s.mae)?,
        shifted_psnr: pick(|s| s.shifted_psnr)?,
    })
}
