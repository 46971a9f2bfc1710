//! Temporal resampling of dense AU sequences: uniform decimation by a factor
//! gamma for supervision targets, and linear-interpolation upsampling back to
//! video frame rates.

use crate::au::{AuSequence, AuVector, AU_COUNT};
use crate::error::{Error, Result};

/// Downsampling parameters. `gamma` is the ratio of output to input rate;
/// `1/gamma` must round to an integer stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub gamma: f64,
    /// Index of the first kept frame.
    pub phase: usize,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            phase: 0,
        }
    }
}

impl ResampleConfig {
    pub fn with_gamma(gamma: f64) -> Result<Self> {
        let config = Self {
            gamma,
            phase: 0,
        };
        config.stride()?;
        Ok(config)
    }

    /// The integer decimation stride `round(1/gamma)`.
    pub fn stride(&self) -> Result<usize> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0 && self.gamma.is_finite()) {
            return Err(Error::BadGamma { gamma: self.gamma });
        }
        let inverse = 1.0 / self.gamma;
        let stride = inverse.round();
        if (inverse - stride).abs() > 1e-9 || stride < 1.0 {
            return Err(Error::BadGamma { gamma: self.gamma });
        }
        Ok(stride as usize)
    }
}

/// Keeps frames `phase, phase + stride, ...`; output rate is `fps * gamma`.
pub fn downsample(seq: &AuSequence, config: &ResampleConfig) -> Result<AuSequence> {
    let frames = seq.dense_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let stride = config.stride()?;
    if config.phase >= frames.len() {
        return Err(Error::BadPhase {
            phase: config.phase,
            len: frames.len(),
        });
    }
    let kept: Vec<AuVector> = frames
        .iter()
        .skip(config.phase)
        .step_by(stride)
        .copied()
        .collect();
    AuSequence::dense(seq.fps() * config.gamma, kept)
}

fn lerp_frames(a: &AuVector, b: &AuVector, weight: f64) -> AuVector {
    let mut values = [0.0; AU_COUNT];
    for (slot, value) in values.iter_mut().enumerate() {
        let interpolated = a[slot] + weight * (b[slot] - a[slot]);
        *value = interpolated.clamp(0.0, 1.0);
    }
    AuVector::new(values).expect("clamped values are in range")
}

/// Linear upsampling by an integer factor. Output length is
/// `(N - 1) * factor + 1`, keeping every original frame at positions
/// `k * factor`; output rate is `fps * factor`.
pub fn upsample_linear(seq: &AuSequence, factor: usize) -> Result<AuSequence> {
    let frames = seq.dense_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let factor = factor.max(1);
    let mut out = Vec::with_capacity((frames.len() - 1) * factor + 1);
    for window in frames.windows(2) {
        for step in 0..factor {
            out.push(lerp_frames(
                &window[0],
                &window[1],
                step as f64 / factor as f64,
            ));
        }
    }
    out.push(*frames.last().expect("non-empty"));
    AuSequence::dense(seq.fps() * factor as f64, out)
}

/// Resamples onto exactly `target_len` frames by linear interpolation on the
/// continuous index axis `[0, N - 1]`, sample points evenly spaced with both
/// endpoints included. Output rate scales by `target_len / N`.
pub fn resample_to_length(seq: &AuSequence, target_len: usize) -> Result<AuSequence> {
    let frames = seq.dense_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    if target_len == 0 {
        return Err(Error::EmptyInput);
    }
    let last = frames.len() - 1;
    let mut out = Vec::with_capacity(target_len);
    for sample in 0..target_len {
        let t = if target_len == 1 {
            0.0
        } else {
            sample as f64 * last as f64 / (target_len - 1) as f64
        };
        let base = (t.floor() as usize).min(last);
        if base == last {
            out.push(frames[last]);
        } else {
            out.push(lerp_frames(&frames[base], &frames[base + 1], t - base as f64));
        }
    }
    let fps = seq.fps() * target_len as f64 / frames.len() as f64;
    AuSequence::dense(fps, out)
}
