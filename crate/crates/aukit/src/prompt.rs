//! The emotion-then-AU prompt protocol: building instruction records for
//! training and inference, and leniently recovering emotion + frames from
//! model responses that may be truncated or slightly malformed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::au::{AuSequence, AuTaxonomy, EmotionLabel, EmotionTaxonomy, SparseAuFrame, AU_COUNT, DEFAULT_AU_FPS};
use crate::codec::{serialize_tokens, CodecConfig};
use crate::error::{Error, Result};

const TEMPLATE: &str = include_str!("../assets/prompt_template.txt");

/// Message role in a prompt record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

/// One chat message. Only user messages carry an audio path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    pub content: String,
}

/// One training or inference record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub messages: Vec<Message>,
}

impl PromptRecord {
    /// Checks the structural invariants: user message first with a non-empty
    /// audio path, at most one assistant message, assistant last.
    pub fn validate(&self) -> Result<()> {
        let first = self.messages.first().ok_or(Error::EmptyInput)?;
        if first.role != Role::User || first.audio.as_deref().unwrap_or("").is_empty() {
            return Err(Error::schema(
                "record must start with a user message carrying an audio path",
            ));
        }
        let assistants = self
            .messages
            .iter()
            .filter(|m| m.role == Role::Assistant)
            .count();
        if assistants > 1 {
            return Err(Error::schema("record has more than one assistant message"));
        }
        Ok(())
    }

    pub fn assistant_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::Assistant)
            .map(|m| m.content.as_str())
    }

    pub fn user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

/// Instruction-template parameters. Defaults match the 16 kHz / 5 fps
/// protocol (3200 samples per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplateConfig {
    pub frame_samples: u32,
    pub fps: u32,
    pub taxonomy: AuTaxonomy,
    pub codec: CodecConfig,
}

impl Default for PromptTemplateConfig {
    fn default() -> Self {
        Self {
            frame_samples: 3200,
            fps: 5,
            taxonomy: AuTaxonomy::default_taxonomy().clone(),
            codec: CodecConfig::default(),
        }
    }
}

impl PromptTemplateConfig {
    /// Renders the instruction text with the AU definition block substituted
    /// from the taxonomy.
    pub fn instruction(&self) -> String {
        let mut definitions = String::new();
        for descriptor in self.taxonomy.descriptors() {
            if descriptor.index > 0 {
                definitions.push_str("; ");
            }
            if descriptor.index == AU_COUNT - 1 {
                definitions.push_str("and ");
            }
            definitions.push_str(&format!("AU{} {}", descriptor.index, descriptor.name));
        }
        let hz = self.frame_samples as u64 * self.fps as u64;
        let khz = if hz % 1000 == 0 {
            (hz / 1000).to_string()
        } else {
            (hz as f64 / 1000.0).to_string()
        };
        TEMPLATE
            .trim_end_matches('\n')
            .replace("{KHZ}", &khz)
            .replace("{FRAME_SAMPLES}", &self.frame_samples.to_string())
            .replace("{FPS}", &self.fps.to_string())
            .replace("{AU_COUNT}", &AU_COUNT.to_string())
            .replace("{AU_MAX}", &(AU_COUNT - 1).to_string())
            .replace("{AU_DEFINITIONS}", &definitions)
    }
}

/// Builds one training record: the instruction as the user turn and the
/// serialized emotion-then-AU text as the assistant turn.
pub fn build_training_record(
    audio_path: &str,
    emotion: &EmotionLabel,
    seq: &AuSequence,
    template: &PromptTemplateConfig,
) -> Result<PromptRecord> {
    if audio_path.is_empty() {
        return Err(Error::EmptyInput);
    }
    let assistant = serialize_tokens(emotion, seq, &template.codec)?;
    Ok(PromptRecord {
        messages: vec![
            Message {
                role: Role::User,
                audio: Some(audio_path.to_string()),
                content: template.instruction(),
            },
            Message {
                role: Role::Assistant,
                audio: None,
                content: assistant,
            },
        ],
    })
}

/// Builds one inference record: the user turn only, byte-identical to the
/// training instruction.
pub fn build_inference_prompt(
    audio_path: &str,
    template: &PromptTemplateConfig,
) -> Result<PromptRecord> {
    if audio_path.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PromptRecord {
        messages: vec![Message {
            role: Role::User,
            audio: Some(audio_path.to_string()),
            content: template.instruction(),
        }],
    })
}

/// What lenient response parsing recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub emotion: EmotionLabel,
    /// Recovered frames as a sparse sequence at the native 5 fps rate.
    pub frames: AuSequence,
    pub complete_frames: usize,
    /// True when trailing content had to be discarded (truncated or
    /// malformed suffix).
    pub dropped_suffix: bool,
    pub warnings: Vec<String>,
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let byte = self.peek()?;
        self.pos += 1;
        Some(byte)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, predicate: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&predicate) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii run")
    }
}

/// One leniently parsed pair, or `None` when the input is malformed from the
/// pair's opening bracket onward.
fn lenient_pair(scanner: &mut Scanner) -> Option<(i64, f64)> {
    if scanner.bump() != Some(b'[') {
        return None;
    }
    scanner.skip_ws();
    let index: i64 = scanner
        .take_while(|b| b.is_ascii_digit())
        .parse()
        .ok()?;
    scanner.skip_ws();
    if scanner.bump() != Some(b',') {
        return None;
    }
    scanner.skip_ws();
    let number = scanner.take_while(|b| b.is_ascii_digit() || b == b'.');
    if number.is_empty() || number == "." {
        return None;
    }
    let intensity: f64 = number.parse().ok()?;
    scanner.skip_ws();
    if scanner.bump() != Some(b']') {
        return None;
    }
    Some((index, intensity))
}

/// One leniently parsed frame: out-of-range indices are skipped, duplicate
/// indices keep their first occurrence, out-of-range intensities clamp, all
/// with warnings. Returns `None` if the frame never closes cleanly.
fn lenient_frame(
    scanner: &mut Scanner,
    frame_number: usize,
    warnings: &mut Vec<String>,
) -> Option<SparseAuFrame> {
    if scanner.bump() != Some(b'[') {
        return None;
    }
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    loop {
        scanner.skip_ws();
        match scanner.peek() {
            Some(b']') => {
                scanner.bump();
                break;
            }
            Some(b',') => {
                scanner.bump();
            }
            Some(b'[') => {
                let (index, intensity) = lenient_pair(scanner)?;
                if !(0..AU_COUNT as i64).contains(&index) {
                    warnings.push(format!(
                        "frame {frame_number}: skipped AU index {index} outside 0..=23"
                    ));
                    continue;
                }
                let index = index as usize;
                if pairs.iter().any(|&(existing, _)| existing == index) {
                    warnings.push(format!(
                        "frame {frame_number}: duplicate AU index {index}, keeping first value"
                    ));
                    continue;
                }
                let clamped = intensity.clamp(0.0, 1.0);
                if clamped != intensity {
                    warnings.push(format!(
                        "frame {frame_number}: intensity {intensity} for AU {index} clamped to {clamped}"
                    ));
                }
                pairs.push((index, clamped));
            }
            _ => return None,
        }
    }
    pairs.sort_by_key(|&(index, _)| index);
    Some(SparseAuFrame::new(pairs).expect("sorted deduplicated in-range pairs"))
}

/// Splits `<label>, [` off the front, returning the label text and the byte
/// position of the sequence's opening bracket.
fn find_header(text: &str) -> Option<(&str, usize)> {
    let bytes = text.as_bytes();
    for (pos, &byte) in bytes.iter().enumerate() {
        if byte != b',' {
            continue;
        }
        let mut after = pos + 1;
        while bytes.get(after).is_some_and(|b| b.is_ascii_whitespace()) {
            after += 1;
        }
        if bytes.get(after) == Some(&b'[') {
            return Some((text[..pos].trim(), after));
        }
    }
    None
}

/// Lenient parser for emotion-then-AU model responses. Accepts `.52`,
/// `0.52`, and `1.0` spellings, drops an incomplete trailing frame, clamps
/// out-of-range intensities, and keeps the first of any duplicated index,
/// all reported through [`ParseReport::warnings`].
pub fn parse_response(text: &str, taxonomy: &EmotionTaxonomy) -> Result<ParseReport> {
    let (label, open) = find_header(text).ok_or(Error::NoEmotionHeader)?;
    if label.is_empty() || !taxonomy.contains(label) {
        return Err(Error::NoEmotionHeader);
    }
    let emotion = EmotionLabel::new(label, taxonomy).expect("label is in taxonomy");

    let mut scanner = Scanner {
        bytes: text.as_bytes(),
        pos: open + 1,
    };
    let mut frames = Vec::new();
    let mut warnings = Vec::new();
    let mut dropped_suffix = false;
    loop {
        scanner.skip_ws();
        match scanner.peek() {
            None => {
                dropped_suffix = true;
                break;
            }
            Some(b']') => break,
            Some(b',') => {
                scanner.bump();
            }
            Some(b'[') => match lenient_frame(&mut scanner, frames.len(), &mut warnings) {
                Some(frame) => frames.push(frame),
                None => {
                    dropped_suffix = true;
                    break;
                }
            },
            Some(_) => {
                dropped_suffix = true;
                break;
            }
        }
    }
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let complete_frames = frames.len();
    Ok(ParseReport {
        emotion,
        frames: AuSequence::sparse(DEFAULT_AU_FPS, frames)?,
        complete_frames,
        dropped_suffix,
        warnings,
    })
}

/// Writes records as JSONL, one record per line.
pub fn write_corpus(records: &[PromptRecord], writer: &mut impl Write) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut *writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSONL corpus, validating each record's structure.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<PromptRecord>> {
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PromptRecord = serde_json::from_str(&line)?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}
