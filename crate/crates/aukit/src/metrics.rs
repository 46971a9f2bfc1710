//! Evaluation metrics: AU detection/regression scores, emotion accuracy,
//! PSNR and SSIM on grayscale images, and landmark distances.

use serde::{Serialize, Serializer};

use crate::au::{AuSequence, EmotionLabel, AU_COUNT};
use crate::error::{Error, Result};
use crate::geometry::{GrayImage, LandmarkFrame};

/// Options for [`au_detection_metrics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuMetricsConfig {
    /// Activation threshold: a slot is active iff its value is strictly
    /// greater than `tau`.
    pub tau: f64,
    /// When set, MAE averages only over slots active in either sequence
    /// instead of all 24 dimensions.
    pub mae_active_only: bool,
}

impl Default for AuMetricsConfig {
    fn default() -> Self {
        Self {
            tau: 0.0,
            mae_active_only: false,
        }
    }
}

/// Micro-averaged detection counts and regression error over aligned frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuMetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-slot accuracy (tp + tn) / all slots.
    pub slot_accuracy: f64,
    /// Fraction of frames whose active-index set matches exactly.
    pub frame_set_accuracy: f64,
    pub mae: f64,
    #[serde(rename = "tp")]
    pub true_positives: u64,
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    #[serde(rename = "tn")]
    pub true_negatives: u64,
    pub aligned_frames: usize,
    /// Absolute difference of the two input lengths (resolved by
    /// truncation).
    pub length_mismatch: usize,
    /// Set when precision fell back to 0 because nothing was predicted
    /// active.
    pub no_predicted_positives: bool,
    /// Set when recall fell back to 0 because nothing is active in the
    /// ground truth.
    pub no_actual_positives: bool,
}

/// Compares predicted and ground-truth dense sequences slot by slot,
/// truncating to the shorter length.
pub fn au_detection_metrics(
    pred: &AuSequence,
    gt: &AuSequence,
    config: &AuMetricsConfig,
) -> Result<AuMetricReport> {
    let pred_frames = pred.dense_frames()?;
    let gt_frames = gt.dense_frames()?;
    if pred_frames.is_empty() || gt_frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let aligned = pred_frames.len().min(gt_frames.len());
    let length_mismatch = pred_frames.len().abs_diff(gt_frames.len());

    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    let mut tn = 0u64;
    let mut matching_frames = 0usize;
    let mut error_sum = 0.0;
    let mut error_slots = 0u64;

    for (pred_frame, gt_frame) in pred_frames.iter().zip(gt_frames).take(aligned) {
        let mut frame_matches = true;
        for unit in 0..AU_COUNT {
            let p_active = pred_frame[unit] > config.tau;
            let g_active = gt_frame[unit] > config.tau;
            match (p_active, g_active) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
            if p_active != g_active {
                frame_matches = false;
            }
            if !config.mae_active_only || p_active || g_active {
                error_sum += (pred_frame[unit] - gt_frame[unit]).abs();
                error_slots += 1;
            }
        }
        if frame_matches {
            matching_frames += 1;
        }
    }

    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    Ok(AuMetricReport {
        precision,
        recall,
        f1,
        slot_accuracy: (tp + tn) as f64 / (aligned as u64 * AU_COUNT as u64) as f64,
        frame_set_accuracy: matching_frames as f64 / aligned as f64,
        mae: if error_slots == 0 {
            0.0
        } else {
            error_sum / error_slots as f64
        },
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        aligned_frames: aligned,
        length_mismatch,
        no_predicted_positives: tp + fp == 0,
        no_actual_positives: tp + fn_ == 0,
    })
}

/// Fraction of exact case-insensitive label matches.
pub fn emotion_accuracy(pred: &[EmotionLabel], gt: &[EmotionLabel]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let matches = pred
        .iter()
        .zip(gt)
        .filter(|(p, g)| p.as_str().eq_ignore_ascii_case(g.as_str()))
        .count();
    Ok(matches as f64 / pred.len() as f64)
}

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / MSE)`. Identical
/// images return positive infinity.
pub fn psnr(a: &GrayImage, b: &GrayImage, peak: f64) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            left: (a.width(), a.height()),
            right: (b.width(), b.height()),
        });
    }
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let diff = x as f64 - y as f64;
            diff * diff
        })
        .sum::<f64>()
        / a.pixels().len() as f64;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (peak * peak / mse).log10())
    }
}

/// SSIM filter window width.
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, tap) in taps.iter_mut().enumerate() {
        let d = i as f64 - center;
        *tap = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *tap;
    }
    for tap in &mut taps {
        *tap /= sum;
    }
    taps
}

/// Separable Gaussian filter with valid-only output
/// (`(w - 10) x (h - 10)`).
fn gaussian_valid(image: &[f64], width: usize, height: usize) -> Vec<f64> {
    let taps = gaussian_taps();
    let out_w = width - SSIM_WINDOW + 1;
    let out_h = height - SSIM_WINDOW + 1;
    // horizontal pass
    let mut horizontal = vec![0.0; out_w * height];
    for y in 0..height {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &tap) in taps.iter().enumerate() {
                acc += tap * image[y * width + x + k];
            }
            horizontal[y * out_w + x] = acc;
        }
    }
    // vertical pass
    let mut out = vec![0.0; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &tap) in taps.iter().enumerate() {
                acc += tap * horizontal[(y + k) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

/// Mean structural similarity over all fully interior 11x11 Gaussian
/// windows, with the usual stabilizers C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
pub fn ssim(a: &GrayImage, b: &GrayImage, dynamic_range: f64) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            left: (a.width(), a.height()),
            right: (b.width(), b.height()),
        });
    }
    let (width, height) = (a.width(), a.height());
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width,
            height,
            window: SSIM_WINDOW,
        });
    }
    let x: Vec<f64> = a.pixels().iter().map(|&p| p as f64).collect();
    let y: Vec<f64> = b.pixels().iter().map(|&p| p as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();

    let mu_x = gaussian_valid(&x, width, height);
    let mu_y = gaussian_valid(&y, width, height);
    let e_xx = gaussian_valid(&xx, width, height);
    let e_yy = gaussian_valid(&yy, width, height);
    let e_xy = gaussian_valid(&xy, width, height);

    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let var_x = e_xx[i] - mu_x[i] * mu_x[i];
        let var_y = e_yy[i] - mu_y[i] * mu_y[i];
        let cov = e_xy[i] - mu_x[i] * mu_y[i];
        let numerator = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
        let denominator = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
        total += numerator / denominator;
    }
    Ok(total / mu_x.len() as f64)
}

fn serialize_psnr<S: Serializer>(value: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_infinite() {
        serializer.serialize_str("inf")
    } else {
        serializer.serialize_f64(*value)
    }
}

/// PSNR/SSIM pair for one image comparison. PSNR serializes as the string
/// "inf" for identical images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageMetricReport {
    #[serde(serialize_with = "serialize_psnr")]
    pub psnr: f64,
    pub ssim: f64,
}

/// Computes both image metrics with peak = dynamic range = 255.
pub fn image_metrics(a: &GrayImage, b: &GrayImage) -> Result<ImageMetricReport> {
    Ok(ImageMetricReport {
        psnr: psnr(a, b, 255.0)?,
        ssim: ssim(a, b, 255.0)?,
    })
}

/// Landmark subset a distance is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkSubset {
    /// Mouth points 48..=67.
    Mouth,
    /// All 68 points.
    Face,
}

impl LandmarkSubset {
    fn indices(self) -> std::ops::Range<usize> {
        match self {
            LandmarkSubset::Mouth => 48..68,
            LandmarkSubset::Face => 0..68,
        }
    }
}

/// Mean Euclidean distance over frames and subset points.
pub fn landmark_distance(
    pred: &[LandmarkFrame],
    gt: &[LandmarkFrame],
    subset: LandmarkSubset,
) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let indices = subset.indices();
    let mut total = 0.0;
    for (pred_frame, gt_frame) in pred.iter().zip(gt) {
        for index in indices.clone() {
            let (px, py) = pred_frame.points()[index];
            let (gx, gy) = gt_frame.points()[index];
            total += ((px - gx).powi(2) + (py - gy).powi(2)).sqrt();
        }
    }
    Ok(total / (pred.len() * indices.len()) as f64)
}
