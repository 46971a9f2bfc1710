//! # aukit
//!
//! A toolkit for facial action-unit (AU) sequences as used in audio-driven
//! talking-head pipelines. It covers the deterministic data path end to end,
//! without any learned models:
//!
//! - **au**: the 24-unit taxonomy, dense/sparse frame types, sequences, and
//!   emotion label sets.
//! - **codec**: threshold sparsification of dense frames into index-intensity
//!   pairs, the emotion-then-AU token-text serialization and its strict
//!   inverse, and compression statistics.
//! - **resample**: uniform decimation of supervision sequences and linear
//!   interpolation back up to video frame rates.
//! - **prompt**: instruction-record construction for the emotion-then-AU
//!   protocol and a lenient parser for (possibly truncated) model responses.
//! - **geometry**: a canonical 68-point landmark template, linear per-AU
//!   displacement bases, and rasterization to keypoint or line drawings.
//! - **embedding**: windowed temporal-convolution AU embeddings with
//!   loadable kernel files.
//! - **guidance**: disentangled and classifier-free guidance combinations
//!   over denoiser evaluations.
//! - **metrics**: AU detection/regression scores, emotion accuracy, PSNR,
//!   SSIM, and landmark distances.
//! - **io**: JSON and binary sequence files plus raw f32 vector files.

pub mod au;
pub mod codec;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod io;
pub mod metrics;
pub mod prompt;
pub mod resample;

pub use au::{
    au_metadata, validate_dense, AuDescriptor, AuSequence, AuTaxonomy, AuVector, EmotionLabel,
    EmotionTaxonomy, FacialRegion, Representation, SparseAuFrame, AU_COUNT, DEFAULT_AU_FPS,
    DEFAULT_VIDEO_FPS,
};
pub use codec::{
    compression_stats, densify, densify_sequence, deserialize_tokens, serialize_tokens, sparsify,
    sparsify_sequence, CodecConfig, CompressionStats,
};
pub use error::{Error, Result};
