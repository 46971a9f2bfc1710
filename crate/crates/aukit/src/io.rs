//! On-disk AU sequence formats: a human-facing JSON form and a compact
//! binary form (magic "AUSQ") for dense bulk corpora. Reading auto-detects
//! the format from the magic bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::au::{AuSequence, AuVector, Representation, SparseAuFrame, AU_COUNT};
use crate::codec::densify_sequence;
use crate::error::{Error, Result};

const SEQUENCE_MAGIC: &[u8; 4] = b"AUSQ";
const SEQUENCE_VERSION: u8 = 1;

/// Serialization format for [`write_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFormat {
    Json,
    /// Dense-only binary layout.
    Binary,
}

impl SequenceFormat {
    /// Picks a format from a file extension: `.json` means JSON, anything
    /// else the binary form.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => SequenceFormat::Json,
            _ => SequenceFormat::Binary,
        }
    }
}

#[derive(Serialize)]
struct DenseDto<'a> {
    fps: f64,
    n_units: usize,
    representation: &'static str,
    frames: Vec<&'a [f64]>,
}

#[derive(Serialize)]
struct SparseDto<'a> {
    fps: f64,
    n_units: usize,
    representation: &'static str,
    frames: Vec<&'a [(usize, f64)]>,
}

#[derive(Deserialize)]
struct SequenceHeaderDto {
    fps: f64,
    n_units: usize,
    representation: String,
    frames: serde_json::Value,
}

/// Canonical JSON rendering of a sequence.
pub fn sequence_to_json(seq: &AuSequence) -> String {
    match seq.representation() {
        Representation::Dense => {
            let frames = seq
                .dense_frames()
                .expect("dense representation")
                .iter()
                .map(|f| f.values().as_slice())
                .collect();
            serde_json::to_string(&DenseDto {
                fps: seq.fps(),
                n_units: AU_COUNT,
                representation: "dense",
                frames,
            })
        }
        Representation::Sparse => {
            let frames = seq
                .sparse_frames()
                .expect("sparse representation")
                .iter()
                .map(|f| f.pairs())
                .collect();
            serde_json::to_string(&SparseDto {
                fps: seq.fps(),
                n_units: AU_COUNT,
                representation: "sparse",
                frames,
            })
        }
    }
    .expect("sequence DTOs serialize")
}

/// Parses and validates the JSON sequence form.
pub fn sequence_from_json_str(json: &str) -> Result<AuSequence> {
    let dto: SequenceHeaderDto = serde_json::from_str(json)?;
    if dto.n_units != AU_COUNT {
        return Err(Error::schema(format!(
            "n_units is {}, expected {AU_COUNT}",
            dto.n_units
        )));
    }
    match dto.representation.as_str() {
        "dense" => {
            let raw: Vec<Vec<f64>> = serde_json::from_value(dto.frames)?;
            let frames = raw
                .iter()
                .map(|values| AuVector::from_slice(values))
                .collect::<Result<Vec<_>>>()?;
            AuSequence::dense(dto.fps, frames)
        }
        "sparse" => {
            let raw: Vec<Vec<(i64, f64)>> = serde_json::from_value(dto.frames)?;
            let frames = raw
                .into_iter()
                .map(|pairs| {
                    let pairs = pairs
                        .into_iter()
                        .map(|(index, value)| {
                            if !(0..AU_COUNT as i64).contains(&index) {
                                Err(Error::BadIndex { index })
                            } else {
                                Ok((index as usize, value))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    SparseAuFrame::new(pairs)
                })
                .collect::<Result<Vec<_>>>()?;
            AuSequence::sparse(dto.fps, frames)
        }
        other => Err(Error::schema(format!("unknown representation {other:?}"))),
    }
}

/// Binary encoding; dense sequences only.
pub fn sequence_to_bytes(seq: &AuSequence) -> Result<Vec<u8>> {
    let frames = seq.dense_frames().map_err(|_| {
        Error::schema("binary sequence format stores dense frames only".to_string())
    })?;
    let mut out = Vec::with_capacity(15 + frames.len() * AU_COUNT * 4);
    out.extend_from_slice(SEQUENCE_MAGIC);
    out.push(SEQUENCE_VERSION);
    out.extend_from_slice(&(seq.fps() as f32).to_le_bytes());
    out.extend_from_slice(&(AU_COUNT as u16).to_le_bytes());
    out.extend_from_slice(&(frames.len() as u32).to_le_bytes());
    for frame in frames {
        for &value in frame.values() {
            out.extend_from_slice(&(value as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Binary decoding with full validation of magic, version, schema, and
/// payload length.
pub fn sequence_from_bytes(data: &[u8]) -> Result<AuSequence> {
    if data.len() < 15 || &data[..4] != SEQUENCE_MAGIC {
        return Err(Error::corrupt("not an AUSQ sequence file"));
    }
    if data[4] != SEQUENCE_VERSION {
        return Err(Error::schema(format!(
            "unsupported sequence version {}",
            data[4]
        )));
    }
    let fps = f32::from_le_bytes([data[5], data[6], data[7], data[8]]) as f64;
    let n_units = u16::from_le_bytes([data[9], data[10]]) as usize;
    if n_units != AU_COUNT {
        return Err(Error::schema(format!(
            "n_units is {n_units}, expected {AU_COUNT}"
        )));
    }
    let n_frames = u32::from_le_bytes([data[11], data[12], data[13], data[14]]) as usize;
    let payload = &data[15..];
    let expected = n_frames
        .checked_mul(AU_COUNT * 4)
        .ok_or_else(|| Error::corrupt("frame count overflows"))?;
    if payload.len() != expected {
        return Err(Error::corrupt(format!(
            "payload is {} bytes, expected {expected} for {n_frames} dense frames",
            payload.len()
        )));
    }
    let mut frames = Vec::with_capacity(n_frames);
    for chunk in payload.chunks_exact(AU_COUNT * 4) {
        let values: Vec<f64> = chunk
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        frames.push(AuVector::from_slice(&values)?);
    }
    AuSequence::dense(fps, frames)
}

/// Writes a sequence in the requested format.
pub fn write_sequence(seq: &AuSequence, path: impl AsRef<Path>, format: SequenceFormat) -> Result<()> {
    let bytes = match format {
        SequenceFormat::Json => sequence_to_json(seq).into_bytes(),
        SequenceFormat::Binary => sequence_to_bytes(seq)?,
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a sequence, detecting the format from the magic bytes.
pub fn read_sequence(path: impl AsRef<Path>) -> Result<AuSequence> {
    let data = std::fs::read(path)?;
    if data.starts_with(SEQUENCE_MAGIC) {
        sequence_from_bytes(&data)
    } else {
        let text = std::str::from_utf8(&data)
            .map_err(|_| Error::corrupt("sequence file is neither AUSQ nor UTF-8 JSON"))?;
        sequence_from_json_str(text)
    }
}

/// Reads any sequence file and returns it densified.
pub fn read_dense_sequence(path: impl AsRef<Path>) -> Result<AuSequence> {
    let seq = read_sequence(path)?;
    match seq.representation() {
        Representation::Dense => Ok(seq),
        Representation::Sparse => densify_sequence(&seq),
    }
}

/// Raw little-endian f32 vector files used by the guidance CLI.
pub fn read_f32_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let data = std::fs::read(path)?;
    if data.len() % 4 != 0 {
        return Err(Error::corrupt(format!(
            "f32 vector file length {} is not a multiple of 4",
            data.len()
        )));
    }
    Ok(data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_f32_vector(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for &value in values {
        out.extend_from_slice(&(value as f32).to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{quantize, sparsify_sequence, CodecConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(seed: u64, frames: usize) -> AuSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frames = (0..frames)
            .map(|_| {
                let mut values = [0.0; AU_COUNT];
                for v in &mut values {
                    *v = quantize(rng.gen_range(0.0..=1.0), 2);
                }
                AuVector::new(values).unwrap()
            })
            .collect();
        AuSequence::dense(25.0, frames).unwrap()
    }

    #[test]
    fn json_roundtrip_dense_and_sparse() {
        let dense = random_dense(1, 5);
        let json = sequence_to_json(&dense);
        assert_eq!(sequence_from_json_str(&json).unwrap(), dense);

        let sparse = sparsify_sequence(&dense, &CodecConfig::default()).unwrap();
        let json = sequence_to_json(&sparse);
        assert_eq!(sequence_from_json_str(&json).unwrap(), sparse);
    }

    #[test]
    fn binary_roundtrip_is_f32_exact() {
        let dense = random_dense(2, 7);
        let bytes = sequence_to_bytes(&dense).unwrap();
        let back = sequence_from_bytes(&bytes).unwrap();
        assert_eq!(back.len(), dense.len());
        assert_eq!(back.fps(), 25.0);
        for (a, b) in back
            .dense_frames()
            .unwrap()
            .iter()
            .zip(dense.dense_frames().unwrap())
        {
            for unit in 0..AU_COUNT {
                assert_eq!(a[unit] as f32, b[unit] as f32);
            }
        }
        // two-decimal data re-encodes to identical bytes
        assert_eq!(sequence_to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn binary_rejects_sparse_and_corruption() {
        let sparse = sparsify_sequence(&random_dense(3, 2), &CodecConfig::default()).unwrap();
        assert!(sequence_to_bytes(&sparse).is_err());

        let bytes = sequence_to_bytes(&random_dense(3, 2)).unwrap();
        assert!(sequence_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_units = bytes.clone();
        wrong_units[9] = 23;
        assert!(matches!(
            sequence_from_bytes(&wrong_units),
            Err(Error::SchemaError { .. }) | Err(Error::CorruptFile { .. })
        ));
    }

    #[test]
    fn json_rejects_wrong_schema() {
        assert!(sequence_from_json_str("{}").is_err());
        let bad_units = r#"{"fps": 25.0, "n_units": 23, "representation": "dense", "frames": []}"#;
        assert!(matches!(
            sequence_from_json_str(bad_units),
            Err(Error::SchemaError { .. })
        ));
        let bad_value =
            r#"{"fps": 25.0, "n_units": 24, "representation": "sparse", "frames": [[[24, 0.5]]]}"#;
        assert!(matches!(
            sequence_from_json_str(bad_value),
            Err(Error::BadIndex { index: 24 })
        ));
    }

    #[test]
    fn file_roundtrip_with_autodetection() {
        let dir = tempfile::tempdir().unwrap();
        let dense = random_dense(4, 3);

        let json_path = dir.path().join("seq.ausq.json");
        write_sequence(&dense, &json_path, SequenceFormat::Json).unwrap();
        assert_eq!(read_sequence(&json_path).unwrap(), dense);

        let bin_path = dir.path().join("seq.ausq");
        write_sequence(&dense, &bin_path, SequenceFormat::Binary).unwrap();
        let back = read_sequence(&bin_path).unwrap();
        assert_eq!(back.len(), dense.len());

        assert_eq!(
            SequenceFormat::for_path(&json_path),
            SequenceFormat::Json
        );
        assert_eq!(SequenceFormat::for_path(&bin_path), SequenceFormat::Binary);
    }

    #[test]
    fn f32_vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.f32");
        write_f32_vector(&[0.2, 0.3, -1.5], &path).unwrap();
        let back = read_f32_vector(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[0] - 0.2).abs() < 1e-6);
        std::fs::write(&path, [0u8; 3]).unwrap();
        assert!(read_f32_vector(&path).is_err());
    }
}
