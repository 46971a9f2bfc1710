//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aukit::au::{AuTaxonomy, EmotionLabel, EmotionTaxonomy, Representation};
use aukit::codec::{
    compression_stats, densify_sequence, deserialize_tokens, serialize_tokens, sparsify_sequence,
    CodecConfig,
};
use aukit::embedding::{embed_sequence, ConvKernel, EmbeddingConfig, Padding};
use aukit::error::{Error, Result};
use aukit::geometry::{
    landmarks_from_file, landmarks_to_json, map_sequence, rasterize, DisplacementBasis, GrayImage,
    RenderMode,
};
use aukit::guidance::{disentangled_combine, GuidanceInputs};
use aukit::io::{
    read_dense_sequence, read_f32_vector, read_sequence, write_f32_vector, write_sequence,
    SequenceFormat,
};
use aukit::metrics::{
    au_detection_metrics, emotion_accuracy, image_metrics, landmark_distance, AuMetricsConfig,
    LandmarkSubset,
};
use aukit::prompt::{
    build_inference_prompt, build_training_record, parse_response, write_corpus,
    PromptTemplateConfig,
};
use aukit::resample::{downsample, resample_to_length, upsample_linear, ResampleConfig};

use crate::{
    Command, DecodeArgs, EmbedArgs, EncodeArgs, EvalAuArgs, EvalCommand, EvalEmotionArgs,
    EvalImageArgs, EvalLmdArgs, FormatArg, GuideArgs, InfoArgs, ModeArg, PromptsBuildArgs,
    PromptsCommand, PromptsParseArgs, RenderArgs, ResampleArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Encode(args) => encode(args),
        Command::Decode(args) => decode(args),
        Command::Resample(args) => resample(args),
        Command::Prompts(PromptsCommand::Build(args)) => prompts_build(args),
        Command::Prompts(PromptsCommand::Parse(args)) => prompts_parse(args),
        Command::Render(args) => render(args),
        Command::Embed(args) => embed(args),
        Command::Guide(args) => guide(args),
        Command::Eval(EvalCommand::Au(args)) => eval_au(args),
        Command::Eval(EvalCommand::Emotion(args)) => eval_emotion(args),
        Command::Eval(EvalCommand::Image(args)) => eval_image(args),
        Command::Eval(EvalCommand::Lmd(args)) => eval_lmd(args),
        Command::Info(args) => info(args),
    }
}

fn resolve_format(path: &Path, flag: Option<FormatArg>) -> SequenceFormat {
    match flag {
        Some(FormatArg::Json) => SequenceFormat::Json,
        Some(FormatArg::Binary) => SequenceFormat::Binary,
        None => SequenceFormat::for_path(path),
    }
}

fn encode(args: EncodeArgs) -> Result<()> {
    let config = CodecConfig {
        lambda: args.lambda,
        ..CodecConfig::default()
    };
    config.validate()?;
    let dense = read_dense_sequence(&args.input)?;
    let sparse = sparsify_sequence(&dense, &config)?;

    if args.tokens {
        let emotion = args.emotion.expect("clap enforces --emotion with --tokens");
        let label = EmotionLabel::new(&emotion, EmotionTaxonomy::mead8())?;
        let text = serialize_tokens(&label, &sparse, &config)?;
        match &args.out {
            Some(path) => fs::write(path, text.as_bytes())?,
            None => println!("{text}"),
        }
        let stats = compression_stats(&dense, &config)?;
        eprintln!(
            "{} frames, {:.2} active AUs/frame, {:.2}% character reduction",
            dense.len(),
            stats.mean_active_per_frame,
            stats.reduction_pct
        );
        return Ok(());
    }

    let out = args
        .out
        .ok_or_else(|| Error::schema("encode needs --out unless --tokens is set".to_string()))?;
    write_sequence(&sparse, &out, resolve_format(&out, args.format))
}

fn decode(args: DecodeArgs) -> Result<()> {
    if args.tokens {
        let text = fs::read_to_string(&args.input)?;
        let (emotion, sparse) = deserialize_tokens(&text, EmotionTaxonomy::mead8())?;
        println!("{emotion}");
        if let Some(out) = &args.out {
            let seq = if args.dense {
                densify_sequence(&sparse)?
            } else {
                sparse
            };
            write_sequence(&seq, out, resolve_format(out, args.format))?;
        }
        return Ok(());
    }

    let seq = read_sequence(&args.input)?;
    if seq.representation() != Representation::Sparse {
        return Err(Error::schema(
            "decode expects a sparse sequence (input is already dense)".to_string(),
        ));
    }
    let dense = densify_sequence(&seq)?;
    let out = args
        .out
        .ok_or_else(|| Error::schema("decode needs --out for sequence input".to_string()))?;
    write_sequence(&dense, &out, resolve_format(&out, args.format))
}

fn resample(args: ResampleArgs) -> Result<()> {
    let seq = read_dense_sequence(&args.input)?;
    let out_seq = match (args.gamma, args.factor, args.target_len) {
        (Some(gamma), None, None) => {
            let config = ResampleConfig {
                gamma,
                phase: args.phase,
            };
            downsample(&seq, &config)?
        }
        (None, Some(factor), None) => upsample_linear(&seq, factor)?,
        (None, None, Some(target_len)) => resample_to_length(&seq, target_len)?,
        _ => {
            return Err(Error::schema(
                "resample needs exactly one of --gamma, --factor, --target-len".to_string(),
            ))
        }
    };
    write_sequence(&out_seq, &args.out, resolve_format(&args.out, args.format))
}

fn find_sequence_file(seq_dir: &Path, stem: &str) -> Option<PathBuf> {
    for suffix in [".ausq.json", ".ausq", ".json"] {
        let candidate = seq_dir.join(format!("{stem}{suffix}"));
        if candidate.is_file() {
            return Some(candidate);
        }
    }
    None
}

fn prompts_build(args: PromptsBuildArgs) -> Result<()> {
    let emotions: BTreeMap<String, String> =
        serde_json::from_str(&fs::read_to_string(&args.emotions)?)?;
    if emotions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let seq_dir = args.seq_dir.as_deref().unwrap_or(&args.audio_dir);
    let codec = CodecConfig {
        lambda: args.lambda,
        ..CodecConfig::default()
    };
    codec.validate()?;
    let template = PromptTemplateConfig {
        codec,
        ..PromptTemplateConfig::default()
    };
    let taxonomy = EmotionTaxonomy::mead8();

    let mut records = Vec::with_capacity(emotions.len());
    for (filename, emotion) in &emotions {
        let audio_path = args.audio_dir.join(filename);
        if !audio_path.is_file() {
            return Err(Error::schema(format!(
                "audio file {} not found under --audio-dir",
                audio_path.display()
            )));
        }
        let audio = audio_path.to_string_lossy().into_owned();
        if args.inference {
            records.push(build_inference_prompt(&audio, &template)?);
            continue;
        }
        let stem = Path::new(filename)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(filename);
        let seq_path = find_sequence_file(seq_dir, stem).ok_or_else(|| {
            Error::schema(format!("no sequence file for {stem:?} under --seq-dir"))
        })?;
        let seq = read_sequence(&seq_path)?;
        let sparse = match seq.representation() {
            Representation::Sparse => seq,
            Representation::Dense => sparsify_sequence(&seq, &template.codec)?,
        };
        let label = EmotionLabel::new(emotion, taxonomy)?;
        records.push(build_training_record(&audio, &label, &sparse, &template)?);
    }

    let mut file = fs::File::create(&args.out)?;
    write_corpus(&records, &mut file)?;
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn prompts_parse(args: PromptsParseArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let report = parse_response(&text, EmotionTaxonomy::mead8())?;
    let summary = serde_json::json!({
        "emotion": report.emotion.as_str(),
        "complete_frames": report.complete_frames,
        "dropped_suffix": report.dropped_suffix,
        "warnings": report.warnings,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    if let Some(out) = &args.out {
        let seq = if args.dense {
            densify_sequence(&report.frames)?
        } else {
            report.frames
        };
        write_sequence(&seq, out, resolve_format(out, args.format))?;
    }
    Ok(())
}

fn parse_size(size: &str) -> Result<(usize, usize)> {
    let (w, h) = size
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::schema(format!("--size must look like 256x256, got {size:?}")))?;
    let width = w
        .parse()
        .map_err(|_| Error::schema(format!("bad width {w:?}")))?;
    let height = h
        .parse()
        .map_err(|_| Error::schema(format!("bad height {h:?}")))?;
    Ok((width, height))
}

fn render(args: RenderArgs) -> Result<()> {
    if args.out_dir.is_none() && args.landmarks.is_none() {
        return Err(Error::schema(
            "render needs --out-dir and/or --landmarks".to_string(),
        ));
    }
    let (width, height) = parse_size(&args.size)?;
    let seq = read_dense_sequence(&args.input)?;
    let taxonomy = AuTaxonomy::default_taxonomy();
    let basis = match &args.basis {
        Some(path) => DisplacementBasis::from_file(path, taxonomy)?,
        None => DisplacementBasis::default_basis().clone(),
    };
    let frames = map_sequence(&seq, &basis, !args.no_clamp)?;

    if let Some(path) = &args.landmarks {
        fs::write(path, landmarks_to_json(&frames))?;
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let mode = match args.mode {
            ModeArg::Lmk => RenderMode::Lmk,
            ModeArg::Rom => RenderMode::Rom,
        };
        for (index, frame) in frames.iter().enumerate() {
            let image = rasterize(frame, width, height, mode)?;
            image.write_pgm_file(dir.join(format!("frame_{index:05}.pgm")))?;
        }
        eprintln!("rendered {} frames to {}", frames.len(), dir.display());
    }
    Ok(())
}

fn embed(args: EmbedArgs) -> Result<()> {
    let seq = read_dense_sequence(&args.input)?;
    let kernel = ConvKernel::read_file(&args.kernel)?;
    let padding = match args.padding.as_str() {
        "replicate" => Padding::Replicate,
        "zero" => Padding::Zero,
        other => {
            return Err(Error::schema(format!(
                "--padding must be replicate or zero, got {other:?}"
            )))
        }
    };
    let config = EmbeddingConfig {
        n: args.n,
        dim: kernel.dim(),
        padding,
    };
    let embeddings = embed_sequence(&seq, &kernel, &config)?;
    let flat: Vec<f64> = embeddings
        .iter()
        .flat_map(|e| e.values().iter().copied())
        .collect();
    write_f32_vector(&flat, &args.out)?;
    eprintln!(
        "embedded {} frames at dim {} into {}",
        embeddings.len(),
        kernel.dim(),
        args.out.display()
    );
    Ok(())
}

fn guide(args: GuideArgs) -> Result<()> {
    let [none, aux, au, both] = [
        &args.inputs[0],
        &args.inputs[1],
        &args.inputs[2],
        &args.inputs[3],
    ]
    .map(read_f32_vector);
    let inputs = GuidanceInputs {
        e_none: none?,
        e_aux: aux?,
        e_au: au?,
        e_both: both?,
        s_aux: args.s_aux,
        s_au: args.s_au,
    };
    let combined = disentangled_combine(&inputs)?;
    write_f32_vector(&combined, &args.out)?;
    Ok(())
}

fn eval_au(args: EvalAuArgs) -> Result<()> {
    let pred = read_dense_sequence(&args.pred)?;
    let gt = read_dense_sequence(&args.gt)?;
    let config = AuMetricsConfig {
        tau: args.tau,
        mae_active_only: args.mae_active_only,
    };
    let report = au_detection_metrics(&pred, &gt, &config)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<EmotionLabel>> {
    let text = fs::read_to_string(path)?;
    let raw: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    };
    raw.iter()
        .map(|label| EmotionLabel::new(label, EmotionTaxonomy::mead8()))
        .collect()
}

fn eval_emotion(args: EvalEmotionArgs) -> Result<()> {
    let pred = read_labels(&args.pred)?;
    let gt = read_labels(&args.gt)?;
    let accuracy = emotion_accuracy(&pred, &gt)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "accuracy": accuracy,
            "count": pred.len(),
        }))
        .expect("json")
    );
    Ok(())
}

fn eval_image(args: EvalImageArgs) -> Result<()> {
    let a = GrayImage::read_pgm_file(&args.a)?;
    let b = GrayImage::read_pgm_file(&args.b)?;
    let report = image_metrics(&a, &b)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn eval_lmd(args: EvalLmdArgs) -> Result<()> {
    let pred = landmarks_from_file(&args.pred)?;
    let gt = landmarks_from_file(&args.gt)?;
    let subset = match args.subset.as_str() {
        "mouth" => LandmarkSubset::Mouth,
        "face" => LandmarkSubset::Face,
        other => {
            return Err(Error::schema(format!(
                "--subset must be mouth or face, got {other:?}"
            )))
        }
    };
    let distance = landmark_distance(&pred, &gt, subset)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "landmark_distance": distance,
            "subset": args.subset,
            "frames": pred.len(),
        }))
        .expect("json")
    );
    Ok(())
}

fn info(args: InfoArgs) -> Result<()> {
    let taxonomy = AuTaxonomy::default_taxonomy();
    if args.machine {
        let payload = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "defaults": {
                "lambda": 0.0,
                "gamma": 0.2,
                "window_half": 2,
                "s_au": aukit::guidance::DEFAULT_AU_SCALE,
                "s_aux": aukit::guidance::DEFAULT_AUX_SCALE,
                "video_fps": aukit::DEFAULT_VIDEO_FPS,
                "au_fps": aukit::DEFAULT_AU_FPS,
            },
            "taxonomy": taxonomy.descriptors(),
        });
        println!("{}", serde_json::to_string_pretty(&payload).expect("json"));
        return Ok(());
    }
    println!("aukit {}", env!("CARGO_PKG_VERSION"));
    println!(
        "defaults: lambda=0, gamma=0.2, n=2, s_au={}, s_aux={}, fps {}->{}",
        aukit::guidance::DEFAULT_AU_SCALE,
        aukit::guidance::DEFAULT_AUX_SCALE,
        aukit::DEFAULT_VIDEO_FPS,
        aukit::DEFAULT_AU_FPS,
    );
    println!();
    let mut out = std::io::stdout().lock();
    for descriptor in taxonomy.descriptors() {
        writeln!(
            out,
            "AU{:<3} {:<26} {:<7} ({})",
            descriptor.index, descriptor.name, descriptor.region.to_string(), descriptor.alias
        )?;
    }
    Ok(())
}
