//! Sparse AU codec: threshold sparsification, densification, the token-text
//! serialization used as language-model supervision, its strict inverse, and
//! compression statistics.
//!
//! The token text for a sequence is
//! `<emotion>, [[[i, v], [i, v], ...], [...], ...]` with one inner list per
//! frame. Intensities are quantized at serialization time and rendered as
//! `.XX` for values below one and `1.0` for one; in-memory values are never
//! quantized.

use serde::Serialize;

use crate::au::{
    AuSequence, AuVector, EmotionLabel, EmotionTaxonomy, SparseAuFrame, AU_COUNT, DEFAULT_AU_FPS,
};
use crate::error::{Error, Result};

/// Sparsification and number-formatting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecConfig {
    /// Sparsity threshold: an AU survives iff its intensity is strictly
    /// greater than `lambda`. Must lie in `[0, 1)`.
    pub lambda: f64,
    /// Decimal places kept at serialization time.
    pub quantize_decimals: u32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            quantize_decimals: 2,
        }
    }
}

impl CodecConfig {
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        let config = Self {
            lambda,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::BadIntensity { value: self.lambda });
        }
        Ok(())
    }
}

/// Character counts comparing the sparse serialization against a dense
/// baseline that renders all 24 index-intensity pairs per frame in the same
/// format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompressionStats {
    pub dense_chars: usize,
    pub sparse_chars: usize,
    pub reduction_pct: f64,
    pub mean_active_per_frame: f64,
}

/// Keeps exactly the (index, value) pairs with value strictly above
/// `config.lambda`, in ascending index order.
pub fn sparsify(frame: &AuVector, config: &CodecConfig) -> SparseAuFrame {
    let pairs: Vec<(usize, f64)> = frame
        .values()
        .iter()
        .enumerate()
        .filter(|&(_, &value)| value > config.lambda)
        .map(|(index, &value)| (index, value))
        .collect();
    SparseAuFrame::new(pairs).expect("ascending in-range pairs from a valid AuVector")
}

/// Expands a sparse frame back to 24 slots; unlisted slots are zero.
pub fn densify(frame: &SparseAuFrame) -> AuVector {
    let mut values = [0.0; AU_COUNT];
    for &(index, intensity) in frame.pairs() {
        values[index] = intensity;
    }
    AuVector::new(values).expect("sparse intensities are in range")
}

/// Sparsifies every frame of a dense sequence.
pub fn sparsify_sequence(seq: &AuSequence, config: &CodecConfig) -> Result<AuSequence> {
    let frames = seq
        .dense_frames()?
        .iter()
        .map(|frame| sparsify(frame, config))
        .collect();
    AuSequence::sparse(seq.fps(), frames)
}

/// Densifies every frame of a sparse sequence.
pub fn densify_sequence(seq: &AuSequence) -> Result<AuSequence> {
    let frames = seq.sparse_frames()?.iter().map(densify).collect();
    AuSequence::dense(seq.fps(), frames)
}

/// Quantizes to `decimals` places, rounding half up.
pub fn quantize(value: f64, decimals: u32) -> f64 {
    let scale = 10u64.pow(decimals) as f64;
    (value * scale + 0.5).floor() / scale
}

/// Renders one intensity: `.XX` for quantized values below one, `1.0` for
/// one.
pub fn format_intensity(value: f64, decimals: u32) -> String {
    let scale = 10u64.pow(decimals);
    let units = (value * scale as f64 + 0.5).floor() as u64;
    if units >= scale {
        "1.0".to_string()
    } else {
        format!(".{units:0width$}", width = decimals as usize)
    }
}

fn write_frame_body(out: &mut String, frame: &SparseAuFrame, decimals: u32) {
    out.push('[');
    for (position, &(index, intensity)) in frame.pairs().iter().enumerate() {
        if position > 0 {
            out.push_str(", ");
        }
        out.push('[');
        out.push_str(&index.to_string());
        out.push_str(", ");
        out.push_str(&format_intensity(intensity, decimals));
        out.push(']');
    }
    out.push(']');
}

fn sequence_body(frames: &[SparseAuFrame], decimals: u32) -> String {
    let mut out = String::new();
    out.push('[');
    for (position, frame) in frames.iter().enumerate() {
        if position > 0 {
            out.push_str(", ");
        }
        write_frame_body(&mut out, frame, decimals);
    }
    out.push(']');
    out
}

/// Serializes an emotion label and a sparse sequence into the supervision
/// token text.
pub fn serialize_tokens(
    emotion: &EmotionLabel,
    seq: &AuSequence,
    config: &CodecConfig,
) -> Result<String> {
    let frames = seq.sparse_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(format!(
        "{}, {}",
        emotion.as_str(),
        sequence_body(frames, config.quantize_decimals)
    ))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let byte = self.peek()?;
        self.pos += 1;
        Some(byte)
    }

    fn skip_spaces(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        match self.bump() {
            Some(b) if b == byte => Ok(()),
            Some(b) => Err(Error::parse(
                self.pos - 1,
                format!("expected {:?}, found {:?}", byte as char, b as char),
            )),
            None => Err(Error::parse(
                self.pos,
                format!("expected {:?}, found end of input", byte as char),
            )),
        }
    }

    /// Longest run of bytes matching `predicate`, as a str slice.
    fn take_while(&mut self, predicate: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&predicate) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii run")
    }
}

fn parse_number(cursor: &mut Cursor) -> Result<f64> {
    let start = cursor.pos;
    let token = cursor.take_while(|b| b.is_ascii_digit() || b == b'.');
    if token.is_empty() {
        return Err(Error::parse(start, "expected a number"));
    }
    token
        .parse::<f64>()
        .map_err(|_| Error::parse(start, format!("non-numeric intensity {token:?}")))
}

fn parse_index(cursor: &mut Cursor) -> Result<i64> {
    let start = cursor.pos;
    let token = cursor.take_while(|b| b.is_ascii_digit());
    if token.is_empty() {
        return Err(Error::parse(start, "expected an AU index"));
    }
    token
        .parse::<i64>()
        .map_err(|_| Error::parse(start, format!("bad AU index {token:?}")))
}

fn parse_pair(cursor: &mut Cursor) -> Result<(usize, f64)> {
    cursor.expect(b'[')?;
    cursor.skip_spaces();
    let index = parse_index(cursor)?;
    if !(0..AU_COUNT as i64).contains(&index) {
        return Err(Error::BadIndex { index });
    }
    cursor.skip_spaces();
    cursor.expect(b',')?;
    cursor.skip_spaces();
    let intensity = parse_number(cursor)?;
    if !(0.0..=1.0).contains(&intensity) {
        return Err(Error::BadIntensity { value: intensity });
    }
    cursor.skip_spaces();
    cursor.expect(b']')?;
    Ok((index as usize, intensity))
}

fn parse_frame(cursor: &mut Cursor) -> Result<SparseAuFrame> {
    cursor.expect(b'[')?;
    cursor.skip_spaces();
    let mut pairs = Vec::new();
    if cursor.peek() == Some(b']') {
        cursor.bump();
        return Ok(SparseAuFrame::empty());
    }
    loop {
        pairs.push(parse_pair(cursor)?);
        cursor.skip_spaces();
        match cursor.bump() {
            Some(b',') => cursor.skip_spaces(),
            Some(b']') => break,
            Some(b) => {
                return Err(Error::parse(
                    cursor.pos - 1,
                    format!("expected ',' or ']', found {:?}", b as char),
                ))
            }
            None => return Err(Error::parse(cursor.pos, "unterminated frame")),
        }
    }
    SparseAuFrame::new(pairs)
}

/// Strict inverse of [`serialize_tokens`]. The resulting sequence carries the
/// native 5 fps rate, which the text format does not encode.
pub fn deserialize_tokens(
    text: &str,
    taxonomy: &EmotionTaxonomy,
) -> Result<(EmotionLabel, AuSequence)> {
    let comma = text
        .find(',')
        .ok_or_else(|| Error::parse(text.len(), "missing `, [` after emotion label"))?;
    let emotion = EmotionLabel::new(text[..comma].trim(), taxonomy)?;

    let mut cursor = Cursor::new(text);
    cursor.pos = comma + 1;
    cursor.skip_spaces();
    cursor.expect(b'[')?;
    cursor.skip_spaces();
    let mut frames = Vec::new();
    if cursor.peek() == Some(b']') {
        cursor.bump();
    } else {
        loop {
            frames.push(parse_frame(&mut cursor)?);
            cursor.skip_spaces();
            match cursor.bump() {
                Some(b',') => cursor.skip_spaces(),
                Some(b']') => break,
                Some(b) => {
                    return Err(Error::parse(
                        cursor.pos - 1,
                        format!("expected ',' or ']', found {:?}", b as char),
                    ))
                }
                None => return Err(Error::parse(cursor.pos, "unterminated sequence")),
            }
        }
    }
    cursor.skip_spaces();
    while matches!(cursor.peek(), Some(b'\n') | Some(b'\r')) {
        cursor.bump();
    }
    if cursor.peek().is_some() {
        return Err(Error::parse(cursor.pos, "trailing data after sequence"));
    }
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok((emotion, AuSequence::sparse(DEFAULT_AU_FPS, frames)?))
}

/// Measures how much the sparse serialization saves over a dense baseline
/// that lists every one of the 24 pairs per frame.
pub fn compression_stats(seq: &AuSequence, config: &CodecConfig) -> Result<CompressionStats> {
    let frames = seq.dense_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }

    let sparse: Vec<SparseAuFrame> = frames.iter().map(|f| sparsify(f, config)).collect();
    let dense_full: Vec<SparseAuFrame> = frames
        .iter()
        .map(|frame| {
            let pairs = frame
                .values()
                .iter()
                .enumerate()
                .map(|(index, &value)| (index, value))
                .collect();
            SparseAuFrame::new(pairs).expect("all 24 slots of a valid AuVector")
        })
        .collect();

    let decimals = config.quantize_decimals;
    let sparse_chars = sequence_body(&sparse, decimals).chars().count();
    let dense_chars = sequence_body(&dense_full, decimals).chars().count();
    let active: usize = sparse.iter().map(SparseAuFrame::len).sum();

    Ok(CompressionStats {
        dense_chars,
        sparse_chars,
        reduction_pct: 100.0 * (1.0 - sparse_chars as f64 / dense_chars as f64),
        mean_active_per_frame: active as f64 / frames.len() as f64,
    })
}
