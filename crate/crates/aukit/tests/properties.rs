//! Property tests for the cross-module invariants: codec round-trips,
//! resampling identities, lenient-parser prefix monotonicity, displacement
//! linearity, embedding locality, and guidance arithmetic.

use proptest::prelude::*;

use aukit::au::{AuSequence, AuTaxonomy, AuVector, EmotionLabel, EmotionTaxonomy, AU_COUNT};
use aukit::codec::{
    compression_stats, densify, deserialize_tokens, quantize, serialize_tokens, sparsify,
    sparsify_sequence, CodecConfig,
};
use aukit::embedding::{embed_sequence, ConvKernel, EmbeddingConfig, Padding};
use aukit::geometry::{
    apply_aus, canonical_template, region_points, DisplacementBasis, LandmarkFrame,
};
use aukit::guidance::{cfg_combine, disentangled_combine, GuidanceInputs};
use aukit::metrics::{au_detection_metrics, AuMetricsConfig};
use aukit::prompt::parse_response;
use aukit::resample::{downsample, upsample_linear, ResampleConfig};

fn two_decimal_vector() -> impl Strategy<Value = AuVector> {
    prop::collection::vec(0u8..=100, AU_COUNT).prop_map(|units| {
        let values: Vec<f64> = units.iter().map(|&u| u as f64 / 100.0).collect();
        AuVector::from_slice(&values).unwrap()
    })
}

fn arbitrary_vector() -> impl Strategy<Value = AuVector> {
    prop::collection::vec(0.0f64..=1.0, AU_COUNT)
        .prop_map(|values| AuVector::from_slice(&values).unwrap())
}

fn emotion_label() -> impl Strategy<Value = EmotionLabel> {
    prop::sample::select(vec![
        "angry", "contempt", "disgusted", "fear", "happy", "neutral", "sad", "surprised",
        "surprise", "happiness",
    ])
    .prop_map(|label| EmotionLabel::new(label, EmotionTaxonomy::mead8()).unwrap())
}

proptest! {
    #[test]
    fn densify_inverts_sparsify_at_lambda_zero(frame in two_decimal_vector()) {
        let sparse = sparsify(&frame, &CodecConfig::default());
        prop_assert_eq!(densify(&sparse), frame);
    }

    #[test]
    fn sparsify_emits_strictly_increasing_indices(
        frame in arbitrary_vector(),
        lambda in 0.0f64..0.99,
    ) {
        let config = CodecConfig { lambda, quantize_decimals: 2 };
        let sparse = sparsify(&frame, &config);
        for window in sparse.pairs().windows(2) {
            prop_assert!(window[0].0 < window[1].0);
        }
        for &(_, intensity) in sparse.pairs() {
            prop_assert!(intensity > lambda);
        }
    }

    #[test]
    fn sparsity_is_monotone_in_lambda(
        frame in arbitrary_vector(),
        lo in 0.0f64..0.99,
        hi in 0.0f64..0.99,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let sparse_lo = sparsify(&frame, &CodecConfig { lambda: lo, quantize_decimals: 2 });
        let sparse_hi = sparsify(&frame, &CodecConfig { lambda: hi, quantize_decimals: 2 });
        for pair in sparse_hi.pairs() {
            prop_assert!(sparse_lo.pairs().contains(pair));
        }
    }

    #[test]
    fn token_text_roundtrips(
        frames in prop::collection::vec(two_decimal_vector(), 1..8),
        emotion in emotion_label(),
    ) {
        let dense = AuSequence::dense(5.0, frames).unwrap();
        let sparse = sparsify_sequence(&dense, &CodecConfig::default()).unwrap();
        let text = serialize_tokens(&emotion, &sparse, &CodecConfig::default()).unwrap();
        let (back_emotion, back_seq) =
            deserialize_tokens(&text, EmotionTaxonomy::mead8()).unwrap();
        prop_assert_eq!(back_emotion, emotion);
        prop_assert_eq!(back_seq, sparse);
    }

    #[test]
    fn serialization_roundtrip_error_is_bounded(
        frames in prop::collection::vec(arbitrary_vector(), 1..4),
        lambda in 0.0f64..0.9,
        emotion in emotion_label(),
    ) {
        let config = CodecConfig { lambda, quantize_decimals: 2 };
        let dense = AuSequence::dense(5.0, frames.clone()).unwrap();
        let sparse = sparsify_sequence(&dense, &config).unwrap();
        let text = serialize_tokens(&emotion, &sparse, &config).unwrap();
        let (_, back) = deserialize_tokens(&text, EmotionTaxonomy::mead8()).unwrap();
        let bound = lambda.max(0.005) + 1e-12;
        for (original, recovered) in frames.iter().zip(back.sparse_frames().unwrap()) {
            let dense_back = densify(recovered);
            for unit in 0..AU_COUNT {
                prop_assert!((dense_back[unit] - original[unit]).abs() <= bound);
            }
        }
    }

    #[test]
    fn lenient_parser_inverts_serializer(
        frames in prop::collection::vec(two_decimal_vector(), 1..6),
        emotion in emotion_label(),
    ) {
        let dense = AuSequence::dense(5.0, frames).unwrap();
        let sparse = sparsify_sequence(&dense, &CodecConfig::default()).unwrap();
        let text = serialize_tokens(&emotion, &sparse, &CodecConfig::default()).unwrap();
        let report = parse_response(&text, EmotionTaxonomy::mead8()).unwrap();
        prop_assert_eq!(report.emotion, emotion);
        prop_assert_eq!(&report.frames, &sparse);
        prop_assert!(!report.dropped_suffix);
        prop_assert!(report.warnings.is_empty());
    }

    #[test]
    fn truncated_responses_never_crash_and_match_bracket_oracle(
        frames in prop::collection::vec(two_decimal_vector(), 1..6),
        emotion in emotion_label(),
        cut_fraction in 0.0f64..1.0,
    ) {
        let dense = AuSequence::dense(5.0, frames).unwrap();
        let sparse = sparsify_sequence(&dense, &CodecConfig::default()).unwrap();
        let text = serialize_tokens(&emotion, &sparse, &CodecConfig::default()).unwrap();
        let header_end = text.find('[').unwrap() + 1;
        let cut = header_end + ((text.len() - header_end) as f64 * cut_fraction) as usize;
        let truncated = &text[..cut];

        // depth-2 closing brackets mark complete frames
        let mut depth = 0i32;
        let mut complete = 0usize;
        for byte in truncated[header_end - 1..].bytes() {
            match byte {
                b'[' => depth += 1,
                b']' => {
                    if depth == 2 {
                        complete += 1;
                    }
                    depth -= 1;
                }
                _ => {}
            }
        }

        match parse_response(truncated, EmotionTaxonomy::mead8()) {
            Ok(report) => prop_assert_eq!(report.complete_frames, complete),
            Err(_) => prop_assert_eq!(complete, 0),
        }
    }

    #[test]
    fn compression_reduction_matches_independent_count(
        frames in prop::collection::vec(two_decimal_vector(), 1..5),
    ) {
        let dense = AuSequence::dense(25.0, frames.clone()).unwrap();
        let stats = compression_stats(&dense, &CodecConfig::default()).unwrap();
        let expected = 100.0 * (1.0 - stats.sparse_chars as f64 / stats.dense_chars as f64);
        prop_assert!((stats.reduction_pct - expected).abs() < 1e-9);
        let active: usize = frames
            .iter()
            .map(|f| f.values().iter().filter(|&&v| v > 0.0).count())
            .sum();
        prop_assert!((stats.mean_active_per_frame - active as f64 / frames.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn upsample_preserves_knots_and_range(
        frames in prop::collection::vec(arbitrary_vector(), 2..6),
        factor in 1usize..6,
    ) {
        let seq = AuSequence::dense(5.0, frames.clone()).unwrap();
        let up = upsample_linear(&seq, factor).unwrap();
        prop_assert_eq!(up.len(), (frames.len() - 1) * factor + 1);
        let up_frames = up.dense_frames().unwrap();
        for (k, original) in frames.iter().enumerate() {
            prop_assert_eq!(&up_frames[k * factor], original);
        }
        for frame in up_frames {
            for unit in 0..AU_COUNT {
                prop_assert!((0.0..=1.0).contains(&frame[unit]));
            }
        }
    }

    #[test]
    fn downsample_inverts_upsample(
        frames in prop::collection::vec(arbitrary_vector(), 1..6),
        stride in 1usize..6,
    ) {
        let seq = AuSequence::dense(5.0, frames).unwrap();
        let up = upsample_linear(&seq, stride).unwrap();
        let config = ResampleConfig { gamma: 1.0 / stride as f64, phase: 0 };
        let down = downsample(&up, &config).unwrap();
        prop_assert_eq!(down.dense_frames().unwrap(), seq.dense_frames().unwrap());
    }

    #[test]
    fn upsampled_ramp_stays_linear(factor in 1usize..8) {
        let frames: Vec<AuVector> = (0..5)
            .map(|i| {
                let mut values = [0.0; AU_COUNT];
                values[3] = i as f64 / 4.0;
                AuVector::new(values).unwrap()
            })
            .collect();
        let seq = AuSequence::dense(5.0, frames).unwrap();
        let up = upsample_linear(&seq, factor).unwrap();
        for (position, frame) in up.dense_frames().unwrap().iter().enumerate() {
            let expected = position as f64 / (4 * factor) as f64;
            prop_assert!((frame[3] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn guidance_matches_scalar_loop_oracle(
        e_none in prop::collection::vec(-10.0f64..10.0, 32),
        e_aux in prop::collection::vec(-10.0f64..10.0, 32),
        e_au in prop::collection::vec(-10.0f64..10.0, 32),
        e_both in prop::collection::vec(-10.0f64..10.0, 32),
        s_aux in 0.0f64..5.0,
        s_au in 0.0f64..5.0,
    ) {
        let inputs = GuidanceInputs {
            e_none: e_none.clone(),
            e_aux: e_aux.clone(),
            e_au: e_au.clone(),
            e_both: e_both.clone(),
            s_aux,
            s_au,
        };
        let out = disentangled_combine(&inputs).unwrap();
        for i in 0..32 {
            let expected = e_au[i] + s_aux * (e_aux[i] - e_none[i]) + s_au * (e_both[i] - e_aux[i]);
            prop_assert!((out[i] - expected).abs() <= 1e-6 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn cfg_interpolates_between_evaluations(
        e_uncond in prop::collection::vec(-5.0f64..5.0, 16),
        e_cond in prop::collection::vec(-5.0f64..5.0, 16),
        scale in 0.0f64..10.0,
    ) {
        let out = cfg_combine(&e_uncond, &e_cond, scale).unwrap();
        for i in 0..16 {
            let expected = e_uncond[i] + scale * (e_cond[i] - e_uncond[i]);
            prop_assert!((out[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn detection_counts_satisfy_identities(
        pred in prop::collection::vec(two_decimal_vector(), 1..6),
        gt in prop::collection::vec(two_decimal_vector(), 1..6),
    ) {
        let pred_seq = AuSequence::dense(5.0, pred.clone()).unwrap();
        let gt_seq = AuSequence::dense(5.0, gt.clone()).unwrap();
        let report = au_detection_metrics(&pred_seq, &gt_seq, &AuMetricsConfig::default()).unwrap();
        let aligned = pred.len().min(gt.len());
        prop_assert_eq!(
            report.true_positives + report.false_positives + report.false_negatives
                + report.true_negatives,
            (aligned * AU_COUNT) as u64
        );
        let predicted_active: u64 = pred[..aligned]
            .iter()
            .map(|f| f.values().iter().filter(|&&v| v > 0.0).count() as u64)
            .sum();
        let actual_active: u64 = gt[..aligned]
            .iter()
            .map(|f| f.values().iter().filter(|&&v| v > 0.0).count() as u64)
            .sum();
        prop_assert_eq!(report.true_positives + report.false_positives, predicted_active);
        prop_assert_eq!(report.true_positives + report.false_negatives, actual_active);
        prop_assert!((0.0..=1.0).contains(&report.mae));
    }

    #[test]
    fn metrics_are_permutation_consistent(
        frames in prop::collection::vec((two_decimal_vector(), two_decimal_vector()), 2..6),
        seed in 0u64..1000,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = frames.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        shuffled.shuffle(&mut rng);

        let build = |pairs: &[(AuVector, AuVector)]| {
            let pred = AuSequence::dense(5.0, pairs.iter().map(|p| p.0).collect()).unwrap();
            let gt = AuSequence::dense(5.0, pairs.iter().map(|p| p.1).collect()).unwrap();
            au_detection_metrics(&pred, &gt, &AuMetricsConfig::default()).unwrap()
        };
        let original = build(&frames);
        let permuted = build(&shuffled);
        prop_assert_eq!(original.true_positives, permuted.true_positives);
        prop_assert_eq!(original.false_positives, permuted.false_positives);
        prop_assert_eq!(original.false_negatives, permuted.false_negatives);
        prop_assert!((original.mae - permuted.mae).abs() < 1e-12);
        prop_assert!((original.frame_set_accuracy - permuted.frame_set_accuracy).abs() < 1e-12);
    }
}

/// Random basis whose entries respect each AU's declared region.
fn random_basis() -> impl Strategy<Value = DisplacementBasis> {
    prop::collection::vec(
        prop::collection::vec((0usize..64, -0.05f64..0.05, -0.05f64..0.05), 0..4),
        AU_COUNT,
    )
    .prop_map(|raw| {
        let taxonomy = AuTaxonomy::default_taxonomy();
        let entries = raw
            .into_iter()
            .enumerate()
            .map(|(au, list)| {
                let allowed = region_points(taxonomy.descriptor(au).unwrap().region);
                list.into_iter()
                    .map(|(slot, dx, dy)| (allowed[slot % allowed.len()], dx, dy))
                    .collect()
            })
            .collect();
        DisplacementBasis::new(entries, taxonomy).unwrap()
    })
}

fn displacement(frame: &LandmarkFrame, template: &LandmarkFrame) -> Vec<(f64, f64)> {
    frame
        .points()
        .iter()
        .zip(template.points())
        .map(|(&(x, y), &(tx, ty))| (x - tx, y - ty))
        .collect()
}

proptest! {
    #[test]
    fn displacement_is_homogeneous_and_additive(
        basis in random_basis(),
        v1 in two_decimal_vector(),
        alpha in 0.0f64..1.0,
    ) {
        let template = canonical_template();

        // homogeneity
        let scaled_values: Vec<f64> = v1.values().iter().map(|&v| v * alpha).collect();
        let scaled = AuVector::from_slice(&scaled_values).unwrap();
        let d_full = displacement(&apply_aus(&template, &basis, &v1, false), &template);
        let d_scaled = displacement(&apply_aus(&template, &basis, &scaled, false), &template);
        for (a, b) in d_scaled.iter().zip(&d_full) {
            prop_assert!((a.0 - alpha * b.0).abs() < 1e-9);
            prop_assert!((a.1 - alpha * b.1).abs() < 1e-9);
        }

        // additivity under the half-split v1 = v1/2 + v1/2
        let half_values: Vec<f64> = v1.values().iter().map(|&v| v / 2.0).collect();
        let half = AuVector::from_slice(&half_values).unwrap();
        let d_half = displacement(&apply_aus(&template, &basis, &half, false), &template);
        for (full, part) in d_full.iter().zip(&d_half) {
            prop_assert!((full.0 - 2.0 * part.0).abs() < 1e-9);
            prop_assert!((full.1 - 2.0 * part.1).abs() < 1e-9);
        }
    }

    #[test]
    fn embedding_is_linear_without_bias(
        frames in prop::collection::vec(two_decimal_vector(), 3..8),
        alpha in 0.0f64..1.0,
        seed in 0u64..100,
    ) {
        let config = EmbeddingConfig { n: 1, dim: 6, padding: Padding::Replicate };
        let mut kernel = ConvKernel::seeded(6, 3, seed).unwrap();
        // zero the bias so scaling is exactly linear
        let weights: Vec<f32> = (0..6 * 3 * AU_COUNT)
            .map(|i| {
                let d = i / (3 * AU_COUNT);
                let rest = i % (3 * AU_COUNT);
                kernel.weight(d, rest / AU_COUNT, rest % AU_COUNT)
            })
            .collect();
        kernel = ConvKernel::new(6, 3, weights, vec![0.0; 6]).unwrap();

        let seq = AuSequence::dense(5.0, frames.clone()).unwrap();
        let scaled_frames: Vec<AuVector> = frames
            .iter()
            .map(|f| {
                let values: Vec<f64> = f.values().iter().map(|&v| v * alpha).collect();
                AuVector::from_slice(&values).unwrap()
            })
            .collect();
        let scaled_seq = AuSequence::dense(5.0, scaled_frames).unwrap();

        let base = embed_sequence(&seq, &kernel, &config).unwrap();
        let scaled = embed_sequence(&scaled_seq, &kernel, &config).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            for (bv, sv) in b.values().iter().zip(s.values()) {
                prop_assert!((sv - alpha * bv).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interior_embeddings_ignore_frames_outside_window(
        frames in prop::collection::vec(two_decimal_vector(), 6..10),
        replacement in two_decimal_vector(),
        seed in 0u64..100,
    ) {
        let config = EmbeddingConfig { n: 2, dim: 4, padding: Padding::Replicate };
        let kernel = ConvKernel::seeded(4, 5, seed).unwrap();
        let t = 3usize; // interior for n = 2 with at least 6 frames
        let seq = AuSequence::dense(5.0, frames.clone()).unwrap();
        let baseline = embed_sequence(&seq, &kernel, &config).unwrap();

        // perturb the last frame, which lies outside [t - 2, t + 2] when len > 6
        let mut perturbed = frames.clone();
        let last = perturbed.len() - 1;
        if last > t + 2 {
            perturbed[last] = replacement;
            let perturbed_seq = AuSequence::dense(5.0, perturbed).unwrap();
            let altered = embed_sequence(&perturbed_seq, &kernel, &config).unwrap();
            prop_assert_eq!(&altered[t], &baseline[t]);
        }
    }
}
