//! Inference-time guidance arithmetic over denoiser evaluations. This module
//! never calls a denoiser: callers supply the already-evaluated vectors for
//! each condition combination and get the combined prediction back.
//!
//! The disentangled combination separates the AU condition from the other
//! (auxiliary) conditions so their strengths can be tuned independently:
//!
//! ```text
//! out = e_au + s_aux * (e_aux - e_none) + s_au * (e_both - e_aux)
//! ```
//!
//! where the four inputs are the denoiser evaluated with neither condition,
//! auxiliary only, AU only, and both.

use crate::error::{Error, Result};

/// Default AU guidance scale; the quality/expressiveness trade-off ablation
/// peaks here.
pub const DEFAULT_AU_SCALE: f64 = 3.5;

/// Default auxiliary-condition scale (plain conditioning strength).
pub const DEFAULT_AUX_SCALE: f64 = 1.0;

/// The four denoiser evaluations and two scales the combination consumes.
/// All vectors must share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceInputs {
    /// Evaluation with both conditions nulled.
    pub e_none: Vec<f64>,
    /// Evaluation with auxiliary conditions only.
    pub e_aux: Vec<f64>,
    /// Evaluation with the AU condition only.
    pub e_au: Vec<f64>,
    /// Evaluation with both conditions present.
    pub e_both: Vec<f64>,
    /// Auxiliary-condition guidance scale (s^H).
    pub s_aux: f64,
    /// AU guidance scale (s^AU).
    pub s_au: f64,
}

impl GuidanceInputs {
    pub fn validate(&self) -> Result<()> {
        let len = self.e_none.len();
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        for (name, vector) in [
            ("e_aux", &self.e_aux),
            ("e_au", &self.e_au),
            ("e_both", &self.e_both),
        ] {
            if vector.len() != len {
                return Err(Error::shape(format!(
                    "{name} has length {}, expected {len}",
                    vector.len()
                )));
            }
        }
        let finite = self
            .e_none
            .iter()
            .chain(&self.e_aux)
            .chain(&self.e_au)
            .chain(&self.e_both)
            .all(|v| v.is_finite());
        if !finite || !self.s_aux.is_finite() || !self.s_au.is_finite() {
            return Err(Error::shape("guidance inputs must be finite".to_string()));
        }
        Ok(())
    }
}

/// The three-term disentangled combination, elementwise:
/// `e_au + s_aux * (e_aux - e_none) + s_au * (e_both - e_aux)`.
pub fn disentangled_combine(inputs: &GuidanceInputs) -> Result<Vec<f64>> {
    inputs.validate()?;
    let out = inputs
        .e_au
        .iter()
        .zip(&inputs.e_aux)
        .zip(&inputs.e_none)
        .zip(&inputs.e_both)
        .map(|(((&au, &aux), &none), &both)| {
            au + inputs.s_aux * (aux - none) + inputs.s_au * (both - aux)
        })
        .collect();
    Ok(out)
}

/// Standard two-term classifier-free guidance:
/// `e_uncond + s * (e_cond - e_uncond)`.
pub fn cfg_combine(e_uncond: &[f64], e_cond: &[f64], scale: f64) -> Result<Vec<f64>> {
    if e_uncond.is_empty() {
        return Err(Error::EmptyInput);
    }
    if e_uncond.len() != e_cond.len() {
        return Err(Error::shape(format!(
            "vectors have lengths {} and {}",
            e_uncond.len(),
            e_cond.len()
        )));
    }
    Ok(e_uncond
        .iter()
        .zip(e_cond)
        .map(|(&uncond, &cond)| uncond + scale * (cond - uncond))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(e_none: f64, e_aux: f64, e_au: f64, e_both: f64, s_aux: f64, s_au: f64) -> GuidanceInputs {
        GuidanceInputs {
            e_none: vec![e_none],
            e_aux: vec![e_aux],
            e_au: vec![e_au],
            e_both: vec![e_both],
            s_aux,
            s_au,
        }
    }

    #[test]
    fn equal_inputs_pass_through_bit_exact() {
        let v = vec![0.125, -3.5, 7.25, 0.0];
        let inputs = GuidanceInputs {
            e_none: v.clone(),
            e_aux: v.clone(),
            e_au: v.clone(),
            e_both: v.clone(),
            s_aux: 1.7,
            s_au: 4.2,
        };
        assert_eq!(disentangled_combine(&inputs).unwrap(), v);
    }

    #[test]
    fn scalar_fixture() {
        let out = disentangled_combine(&inputs(0.2, 0.3, 0.1, 0.5, 1.0, 2.0)).unwrap();
        assert!((out[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_scales_reduce_to_au_term() {
        let out = disentangled_combine(&inputs(0.9, -0.4, 0.125, 2.0, 0.0, 0.0)).unwrap();
        assert_eq!(out, vec![0.125]);
    }

    #[test]
    fn reduces_to_cfg_when_au_condition_is_inert() {
        let e_none = vec![0.1, -0.7, 2.5];
        let e_aux = vec![0.4, 0.2, -1.0];
        let inputs = GuidanceInputs {
            e_none: e_none.clone(),
            e_aux: e_aux.clone(),
            e_au: e_none.clone(),
            e_both: e_aux.clone(),
            s_aux: 2.5,
            s_au: 3.5,
        };
        let disentangled = disentangled_combine(&inputs).unwrap();
        let cfg = cfg_combine(&e_none, &e_aux, 2.5).unwrap();
        assert_eq!(disentangled, cfg);
    }

    #[test]
    fn cfg_fixtures() {
        let uncond = vec![0.5, -1.0];
        let cond = vec![1.5, 3.0];
        assert_eq!(cfg_combine(&uncond, &cond, 0.0).unwrap(), uncond);
        assert_eq!(cfg_combine(&uncond, &cond, 1.0).unwrap(), cond);
        assert_eq!(cfg_combine(&cond, &cond, 9.0).unwrap(), cond);
    }

    #[test]
    fn shape_errors() {
        let mut bad = inputs(0.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        bad.e_both = vec![0.0, 1.0];
        assert!(matches!(
            disentangled_combine(&bad),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(cfg_combine(&[0.0], &[0.0, 1.0], 1.0).is_err());
        assert!(cfg_combine(&[], &[], 1.0).is_err());
        let mut non_finite = inputs(0.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        non_finite.s_au = f64::NAN;
        assert!(disentangled_combine(&non_finite).is_err());
    }

    #[test]
    fn scaling_all_inputs_scales_output() {
        let base = inputs(0.2, 0.3, 0.1, 0.5, 1.5, 3.5);
        let scaled = inputs(0.4, 0.6, 0.2, 1.0, 1.5, 3.5);
        let out = disentangled_combine(&base).unwrap();
        let out_scaled = disentangled_combine(&scaled).unwrap();
        assert!((out_scaled[0] - 2.0 * out[0]).abs() < 1e-12);
    }
}
