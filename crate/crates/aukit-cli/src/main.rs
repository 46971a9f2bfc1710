//! `aukit` command line: encode/decode AU sequences, resample, build prompt
//! corpora, parse model responses, render 2D representations, embed, combine
//! guidance vectors, and evaluate.
//!
//! Exit codes: 0 success, 1 validation/parse errors, 2 I/O errors. All
//! diagnostics go to stderr; results go to stdout or the requested files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use aukit::error::Error;

#[derive(Parser, Debug)]
#[command(name = "aukit", version, about = "Facial action-unit sequence toolkit")]
pub struct Cli {
    /// Emit diagnostics as JSON objects on stderr.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sparsify a dense sequence, optionally serializing to token text.
    Encode(EncodeArgs),
    /// Densify a sparse sequence or token text back to frames.
    Decode(DecodeArgs),
    /// Resample a dense sequence in time.
    Resample(ResampleArgs),
    /// Build or parse prompt-protocol records.
    #[command(subcommand)]
    Prompts(PromptsCommand),
    /// Render a dense sequence to 2D landmark or line-drawing frames.
    Render(RenderArgs),
    /// Embed a dense sequence with a temporal convolution kernel.
    Embed(EmbedArgs),
    /// Combine denoiser evaluations with disentangled guidance.
    Guide(GuideArgs),
    /// Evaluation metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Show toolkit defaults and the AU taxonomy.
    Info(InfoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Binary,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    /// Input dense sequence file (JSON or binary).
    pub input: PathBuf,
    /// Sparsity threshold; AUs with intensity > lambda survive.
    #[arg(long, env = "AUHEAD_LAMBDA", default_value_t = 0.0)]
    pub lambda: f64,
    /// Write the sparse sequence here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output file format (defaults to the output extension).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Serialize to token text instead of a sequence file.
    #[arg(long, requires = "emotion")]
    pub tokens: bool,
    /// Emotion label for token serialization.
    #[arg(long)]
    pub emotion: Option<String>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    /// Input sparse sequence file, or token text with --tokens.
    pub input: PathBuf,
    /// Input is token text; prints the emotion to stdout.
    #[arg(long)]
    pub tokens: bool,
    /// Write the decoded sequence here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Densify before writing (always set for sequence-file input).
    #[arg(long)]
    pub dense: bool,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args, Debug)]
pub struct ResampleArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Downsample by this rate ratio (1/gamma must be an integer).
    #[arg(long, env = "AUHEAD_GAMMA")]
    pub gamma: Option<f64>,
    /// Upsample by this integer factor with linear interpolation.
    #[arg(long, conflicts_with = "gamma")]
    pub factor: Option<usize>,
    /// Resample to exactly this many frames.
    #[arg(long, conflicts_with_all = ["gamma", "factor"])]
    pub target_len: Option<usize>,
    /// First kept frame when downsampling.
    #[arg(long, default_value_t = 0)]
    pub phase: usize,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Subcommand, Debug)]
pub enum PromptsCommand {
    /// Build a JSONL training corpus from audio files, emotions, and AU
    /// sequences.
    Build(PromptsBuildArgs),
    /// Leniently parse a model response into emotion and frames.
    Parse(PromptsParseArgs),
}

#[derive(Args, Debug)]
pub struct PromptsBuildArgs {
    /// Directory holding the audio files named in the emotions map.
    #[arg(long)]
    pub audio_dir: PathBuf,
    /// JSON map from audio filename to emotion label.
    #[arg(long)]
    pub emotions: PathBuf,
    /// Directory holding per-clip AU sequences named `<stem>.ausq.json`,
    /// `<stem>.ausq`, or `<stem>.json` (defaults to the audio directory).
    #[arg(long)]
    pub seq_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "AUHEAD_LAMBDA", default_value_t = 0.0)]
    pub lambda: f64,
    /// Emit inference records (no assistant turn) instead of training
    /// records.
    #[arg(long)]
    pub inference: bool,
}

#[derive(Args, Debug)]
pub struct PromptsParseArgs {
    /// Response text file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the recovered frames here as a sequence file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Densify the recovered frames before writing.
    #[arg(long)]
    pub dense: bool,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lmk,
    Rom,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    pub input: PathBuf,
    /// Write one PGM per frame into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write all landmark frames as JSON to this file.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Rom)]
    pub mode: ModeArg,
    /// Displacement basis JSON (defaults to the built-in basis).
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Raster size as WxH.
    #[arg(long, default_value = "256x256")]
    pub size: String,
    /// Keep landmark coordinates unclamped outside the unit square.
    #[arg(long)]
    pub no_clamp: bool,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    pub input: PathBuf,
    /// Kernel file (magic AUCK).
    #[arg(long)]
    pub kernel: PathBuf,
    /// Half-window size n; the window covers 2n+1 frames.
    #[arg(short = 'n', long = "n", env = "AUHEAD_WINDOW", default_value_t = 2)]
    pub n: usize,
    /// Edge padding policy.
    #[arg(long, default_value = "replicate")]
    pub padding: String,
    /// Output file: raw little-endian f32, frames x dim row-major.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GuideArgs {
    /// The four evaluation files in order: none, aux-only, au-only, both
    /// (raw little-endian f32).
    #[arg(long, num_args = 4, value_names = ["NONE", "AUX", "AU", "BOTH"])]
    pub inputs: Vec<PathBuf>,
    /// Auxiliary-condition guidance scale s^H.
    #[arg(long = "s-h", env = "AUHEAD_S_H", default_value_t = 1.0)]
    pub s_aux: f64,
    /// AU guidance scale s^AU.
    #[arg(long = "s-au", env = "AUHEAD_S_AU", default_value_t = 3.5)]
    pub s_au: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// AU detection and regression metrics between two sequences.
    Au(EvalAuArgs),
    /// Emotion label accuracy between two label lists.
    Emotion(EvalEmotionArgs),
    /// PSNR and SSIM between two PGM images.
    Image(EvalImageArgs),
    /// Landmark distance between two landmark JSON files.
    Lmd(EvalLmdArgs),
}

#[derive(Args, Debug)]
pub struct EvalAuArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    /// Activation threshold (active iff value > tau).
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Average MAE over active slots only instead of all 24 dimensions.
    #[arg(long)]
    pub mae_active_only: bool,
}

#[derive(Args, Debug)]
pub struct EvalEmotionArgs {
    /// Predicted labels: JSON list or one label per line.
    pub pred: PathBuf,
    pub gt: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalImageArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalLmdArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    #[arg(long, default_value = "mouth")]
    pub subset: String,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// Machine-readable output.
    #[arg(long = "machine")]
    pub machine: bool,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn report_error(error: &Error, json: bool) {
    if json {
        let kind = match error {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            _ => "validation",
        };
        eprintln!(
            "{}",
            serde_json::json!({ "error": error.to_string(), "kind": kind })
        );
    } else {
        eprintln!("error: {error}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            return match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{error}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{error}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let json = cli.json;
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            report_error(&error, json);
            ExitCode::from(exit_code_for(&error))
        }
    }
}
