//! Context-aware AU embedding: each frame's 2n+1 neighborhood is flattened
//! and pushed through a temporal convolution kernel, giving one embedding
//! vector per frame. Kernels are data, loaded from files or generated with a
//! seeded RNG for tests; no training happens here.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::au::{AuSequence, AuVector, AU_COUNT};
use crate::error::{Error, Result};

const KERNEL_MAGIC: &[u8; 4] = b"AUCK";
const KERNEL_VERSION: u8 = 1;

/// How out-of-range window rows are filled at clip boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Repeat the first/last frame.
    #[default]
    Replicate,
    /// Fill with zero frames.
    Zero,
}

/// Window and output-shape parameters. The window covers frames
/// `t - n ..= t + n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    /// Half-window size; the window length is `2n + 1`.
    pub n: usize,
    /// Embedding dimension D.
    pub dim: usize,
    pub padding: Padding,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            n: 2,
            dim: 128,
            padding: Padding::Replicate,
        }
    }
}

impl EmbeddingConfig {
    pub fn window(&self) -> usize {
        2 * self.n + 1
    }
}

/// Temporal convolution parameters: weights shaped `[dim, window, 24]` plus
/// a bias per output dimension. Stored as f32 to match the on-disk format.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    dim: usize,
    window: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvKernel {
    pub fn new(dim: usize, window: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if dim == 0 || window == 0 || window % 2 == 0 {
            return Err(Error::shape(format!(
                "kernel needs dim >= 1 and an odd window, got dim {dim}, window {window}"
            )));
        }
        if weights.len() != dim * window * AU_COUNT {
            return Err(Error::shape(format!(
                "kernel weights must hold {} values, got {}",
                dim * window * AU_COUNT,
                weights.len()
            )));
        }
        if bias.len() != dim {
            return Err(Error::shape(format!(
                "kernel bias must hold {dim} values, got {}",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::shape("kernel contains non-finite values".to_string()));
        }
        Ok(Self {
            dim,
            window,
            weights,
            bias,
        })
    }

    /// All-zero kernel with the given shape.
    pub fn zeros(dim: usize, window: usize) -> Result<Self> {
        Self::new(dim, window, vec![0.0; dim * window * AU_COUNT], vec![0.0; dim])
    }

    /// Deterministic random kernel (uniform in [-0.1, 0.1]) for tests and
    /// synthetic pipelines.
    pub fn seeded(dim: usize, window: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..dim * window * AU_COUNT)
            .map(|_| rng.gen_range(-0.1..=0.1))
            .collect();
        let bias = (0..dim).map(|_| rng.gen_range(-0.1..=0.1)).collect();
        Self::new(dim, window, weights, bias)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Half-window implied by the stored window length.
    pub fn half_window(&self) -> usize {
        (self.window - 1) / 2
    }

    pub fn weight(&self, d: usize, w: usize, unit: usize) -> f32 {
        self.weights[(d * self.window + w) * AU_COUNT + unit]
    }

    pub fn weight_mut(&mut self, d: usize, w: usize, unit: usize) -> &mut f32 {
        &mut self.weights[(d * self.window + w) * AU_COUNT + unit]
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    /// Writes the binary kernel format: magic, version, shape header, then
    /// f32 little-endian weights and bias.
    pub fn write(&self, writer: &mut impl Write) -> Result<()> {
        writer.write_all(KERNEL_MAGIC)?;
        writer.write_all(&[KERNEL_VERSION])?;
        writer.write_all(&(self.dim as u16).to_le_bytes())?;
        writer.write_all(&(self.window as u16).to_le_bytes())?;
        writer.write_all(&(AU_COUNT as u16).to_le_bytes())?;
        for value in &self.weights {
            writer.write_all(&value.to_le_bytes())?;
        }
        for value in &self.bias {
            writer.write_all(&value.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write(&mut file)
    }

    pub fn read(reader: &mut impl Read) -> Result<Self> {
        let mut data = Vec::new();
        reader.read_to_end(&mut data)?;
        if data.len() < 11 || &data[..4] != KERNEL_MAGIC {
            return Err(Error::corrupt("not an AUCK kernel file"));
        }
        if data[4] != KERNEL_VERSION {
            return Err(Error::schema(format!(
                "unsupported kernel version {}",
                data[4]
            )));
        }
        let dim = u16::from_le_bytes([data[5], data[6]]) as usize;
        let window = u16::from_le_bytes([data[7], data[8]]) as usize;
        let units = u16::from_le_bytes([data[9], data[10]]) as usize;
        if units != AU_COUNT {
            return Err(Error::schema(format!(
                "kernel built for {units} units, expected {AU_COUNT}"
            )));
        }
        let n_weights = dim * window * AU_COUNT;
        let expected = 11 + 4 * (n_weights + dim);
        if data.len() != expected {
            return Err(Error::corrupt(format!(
                "kernel file is {} bytes, expected {expected}",
                data.len()
            )));
        }
        let mut values = data[11..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let weights: Vec<f32> = values.by_ref().take(n_weights).collect();
        let bias: Vec<f32> = values.collect();
        Self::new(dim, window, weights, bias)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        Self::read(&mut file)
    }
}

/// One embedding vector c_t.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The 2n+1 window rows around frame `t`, padded at the edges.
pub fn context_window(
    seq: &AuSequence,
    t: usize,
    config: &EmbeddingConfig,
) -> Result<Vec<AuVector>> {
    let frames = seq.dense_frames()?;
    if t >= frames.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            max: frames.len().saturating_sub(1),
        });
    }
    let n = config.n as i64;
    let last = frames.len() as i64 - 1;
    let mut rows = Vec::with_capacity(config.window());
    for offset in -n..=n {
        let position = t as i64 + offset;
        let row = if (0..=last).contains(&position) {
            frames[position as usize]
        } else {
            match config.padding {
                Padding::Replicate => frames[position.clamp(0, last) as usize],
                Padding::Zero => AuVector::zeros(),
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Applies the kernel at every frame:
/// `c_t[d] = bias[d] + sum_{w,i} weights[d, w, i] * window(t)[w, i]`.
pub fn embed_sequence(
    seq: &AuSequence,
    kernel: &ConvKernel,
    config: &EmbeddingConfig,
) -> Result<Vec<EmbeddingVector>> {
    if kernel.window() != config.window() || kernel.dim() != config.dim {
        return Err(Error::shape(format!(
            "kernel is dim {} window {}, config wants dim {} window {}",
            kernel.dim(),
            kernel.window(),
            config.dim,
            config.window()
        )));
    }
    let frames = seq.dense_frames()?;
    let mut embeddings = Vec::with_capacity(frames.len());
    for t in 0..frames.len() {
        let window = context_window(seq, t, config)?;
        let mut values = Vec::with_capacity(config.dim);
        for d in 0..config.dim {
            let mut total = kernel.bias()[d] as f64;
            for (w, row) in window.iter().enumerate() {
                for unit in 0..AU_COUNT {
                    total += kernel.weight(d, w, unit) as f64 * row[unit];
                }
            }
            values.push(total);
        }
        embeddings.push(EmbeddingVector { values });
    }
    Ok(embeddings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_sequence(len: usize) -> AuSequence {
        let frames = (0..len)
            .map(|i| {
                let mut values = [0.0; AU_COUNT];
                values[0] = i as f64 / len as f64;
                values[5] = 0.25;
                AuVector::new(values).unwrap()
            })
            .collect();
        AuSequence::dense(5.0, frames).unwrap()
    }

    #[test]
    fn window_replicates_edges() {
        let seq = ramp_sequence(4);
        let config = EmbeddingConfig::default();
        let rows = context_window(&seq, 0, &config).unwrap();
        let frames = seq.dense_frames().unwrap();
        assert_eq!(
            rows,
            vec![frames[0], frames[0], frames[0], frames[1], frames[2]]
        );
    }

    #[test]
    fn window_interior_and_zero_padding() {
        let seq = ramp_sequence(5);
        let config = EmbeddingConfig::default();
        let rows = context_window(&seq, 2, &config).unwrap();
        assert_eq!(rows, seq.dense_frames().unwrap().to_vec());

        let zero_config = EmbeddingConfig {
            padding: Padding::Zero,
            ..config
        };
        let rows = context_window(&seq, 0, &zero_config).unwrap();
        assert_eq!(rows[0], AuVector::zeros());
        assert_eq!(rows[1], AuVector::zeros());
        assert_eq!(rows[2], seq.dense_frames().unwrap()[0]);
    }

    #[test]
    fn degenerate_window_is_single_row() {
        let seq = ramp_sequence(3);
        let config = EmbeddingConfig {
            n: 0,
            dim: 4,
            padding: Padding::Replicate,
        };
        let rows = context_window(&seq, 1, &config).unwrap();
        assert_eq!(rows, vec![seq.dense_frames().unwrap()[1]]);
    }

    #[test]
    fn window_rejects_out_of_range_t() {
        let seq = ramp_sequence(3);
        assert!(matches!(
            context_window(&seq, 3, &EmbeddingConfig::default()),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn delta_kernel_reads_back_au_zero() {
        let seq = ramp_sequence(6);
        let config = EmbeddingConfig {
            n: 2,
            dim: 3,
            padding: Padding::Replicate,
        };
        let mut kernel = ConvKernel::zeros(3, 5).unwrap();
        *kernel.weight_mut(0, 2, 0) = 1.0;
        let embeddings = embed_sequence(&seq, &kernel, &config).unwrap();
        let frames = seq.dense_frames().unwrap();
        for (t, embedding) in embeddings.iter().enumerate() {
            assert!((embedding.values()[0] - frames[t][0]).abs() < 1e-12);
            assert_eq!(embedding.values()[1], 0.0);
        }
    }

    #[test]
    fn constant_sequence_gives_constant_embeddings() {
        let mut values = [0.0; AU_COUNT];
        values[3] = 0.6;
        let frame = AuVector::new(values).unwrap();
        let seq = AuSequence::dense(5.0, vec![frame; 7]).unwrap();
        let config = EmbeddingConfig {
            n: 2,
            dim: 8,
            padding: Padding::Replicate,
        };
        let kernel = ConvKernel::seeded(8, 5, 42).unwrap();
        let embeddings = embed_sequence(&seq, &kernel, &config).unwrap();
        assert_eq!(embeddings.len(), 7);
        for embedding in &embeddings[1..] {
            assert_eq!(embedding, &embeddings[0]);
        }
    }

    #[test]
    fn zero_kernel_with_bias_gives_bias() {
        let seq = ramp_sequence(4);
        let config = EmbeddingConfig {
            n: 1,
            dim: 2,
            padding: Padding::Replicate,
        };
        let kernel = ConvKernel::new(2, 3, vec![0.0; 2 * 3 * AU_COUNT], vec![0.5, -1.5]).unwrap();
        for embedding in embed_sequence(&seq, &kernel, &config).unwrap() {
            assert_eq!(embedding.values(), &[0.5, -1.5]);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let seq = ramp_sequence(4);
        let kernel = ConvKernel::seeded(4, 3, 1).unwrap();
        let config = EmbeddingConfig {
            n: 2,
            dim: 4,
            padding: Padding::Replicate,
        };
        assert!(matches!(
            embed_sequence(&seq, &kernel, &config),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn kernel_file_roundtrip() {
        let kernel = ConvKernel::seeded(16, 5, 7).unwrap();
        let mut buffer = Vec::new();
        kernel.write(&mut buffer).unwrap();
        assert_eq!(&buffer[..4], b"AUCK");
        let back = ConvKernel::read(&mut buffer.as_slice()).unwrap();
        assert_eq!(back, kernel);
    }

    #[test]
    fn kernel_reader_rejects_corruption() {
        let kernel = ConvKernel::seeded(4, 3, 7).unwrap();
        let mut buffer = Vec::new();
        kernel.write(&mut buffer).unwrap();
        assert!(ConvKernel::read(&mut &buffer[..buffer.len() - 2]).is_err());
        let mut wrong_magic = buffer.clone();
        wrong_magic[0] = b'X';
        assert!(ConvKernel::read(&mut wrong_magic.as_slice()).is_err());
        assert!(ConvKernel::new(2, 4, vec![0.0; 2 * 4 * AU_COUNT], vec![0.0; 2]).is_err());
    }

    #[test]
    fn seeded_kernels_are_reproducible() {
        assert_eq!(
            ConvKernel::seeded(8, 5, 123).unwrap(),
            ConvKernel::seeded(8, 5, 123).unwrap()
        );
        assert_ne!(
            ConvKernel::seeded(8, 5, 123).unwrap(),
            ConvKernel::seeded(8, 5, 124).unwrap()
        );
    }
}
