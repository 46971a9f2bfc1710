//! Core action-unit domain types: dense and sparse AU frames, timestamped
//! sequences, the 24-unit taxonomy, and emotion label taxonomies.
//!
//! An action unit (AU) is one localized facial muscle movement; every frame
//! carries 24 of them as continuous intensities in `[0, 1]`. All types here
//! are immutable after construction and all functions are pure.

use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of action units per frame.
pub const AU_COUNT: usize = 24;

/// Native rate of AU supervision sequences, in frames per second.
pub const DEFAULT_AU_FPS: f64 = 5.0;

/// Reference video frame rate the AU rate is derived from.
pub const DEFAULT_VIDEO_FPS: f64 = 25.0;

/// One dense frame: 24 AU intensities, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuVector {
    values: [f64; AU_COUNT],
}

impl AuVector {
    /// Validates an array of 24 intensities.
    pub fn new(values: [f64; AU_COUNT]) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::ValueOutOfRange { index, value });
            }
        }
        Ok(Self { values })
    }

    /// Validates an arbitrary slice: must be exactly 24 values in `[0, 1]`.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let array: [f64; AU_COUNT] = values.try_into().map_err(|_| Error::BadLength {
            expected: AU_COUNT,
            actual: values.len(),
        })?;
        Self::new(array)
    }

    /// The all-zero (neutral) frame.
    pub fn zeros() -> Self {
        Self {
            values: [0.0; AU_COUNT],
        }
    }

    pub fn values(&self) -> &[f64; AU_COUNT] {
        &self.values
    }
}

impl std::ops::Index<usize> for AuVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

/// Validates a dense intensity list into an [`AuVector`].
pub fn validate_dense(values: &[f64]) -> Result<AuVector> {
    AuVector::from_slice(values)
}

/// One sparse frame: the activated AUs only, as ascending (index, intensity)
/// pairs. Intensities stay in `[0, 1]`; which values are "activated" is the
/// codec's sparsity threshold, not a property of this type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseAuFrame {
    pairs: Vec<(usize, f64)>,
}

impl SparseAuFrame {
    /// Validates pairs: indices strictly increasing within `0..24`,
    /// intensities in `[0, 1]`.
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        let mut previous: Option<usize> = None;
        for &(index, intensity) in &pairs {
            if index >= AU_COUNT {
                return Err(Error::BadIndex {
                    index: index as i64,
                });
            }
            if previous.is_some_and(|p| index <= p) {
                return Err(Error::IndexOrder { index });
            }
            if !(0.0..=1.0).contains(&intensity) || !intensity.is_finite() {
                return Err(Error::BadIntensity { value: intensity });
            }
            previous = Some(index);
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Whether a sequence stores dense vectors or sparse pair sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Dense,
    Sparse,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Dense => write!(f, "dense"),
            Representation::Sparse => write!(f, "sparse"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Frames {
    Dense(Vec<AuVector>),
    Sparse(Vec<SparseAuFrame>),
}

/// A timestamped AU sequence: a frame rate plus frames that are all dense or
/// all sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct AuSequence {
    fps: f64,
    frames: Frames,
}

impl AuSequence {
    pub fn dense(fps: f64, frames: Vec<AuVector>) -> Result<Self> {
        Self::check_fps(fps)?;
        Ok(Self {
            fps,
            frames: Frames::Dense(frames),
        })
    }

    pub fn sparse(fps: f64, frames: Vec<SparseAuFrame>) -> Result<Self> {
        Self::check_fps(fps)?;
        Ok(Self {
            fps,
            frames: Frames::Sparse(frames),
        })
    }

    fn check_fps(fps: f64) -> Result<()> {
        if fps > 0.0 && fps.is_finite() {
            Ok(())
        } else {
            Err(Error::BadFps { fps })
        }
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Dense(f) => f.len(),
            Frames::Sparse(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn representation(&self) -> Representation {
        match &self.frames {
            Frames::Dense(_) => Representation::Dense,
            Frames::Sparse(_) => Representation::Sparse,
        }
    }

    /// The dense frames, or [`Error::NotDense`].
    pub fn dense_frames(&self) -> Result<&[AuVector]> {
        match &self.frames {
            Frames::Dense(f) => Ok(f),
            Frames::Sparse(_) => Err(Error::NotDense),
        }
    }

    /// The sparse frames, or [`Error::NotSparse`].
    pub fn sparse_frames(&self) -> Result<&[SparseAuFrame]> {
        match &self.frames {
            Frames::Sparse(f) => Ok(f),
            Frames::Dense(_) => Err(Error::NotSparse),
        }
    }
}

/// Facial region an AU belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacialRegion {
    Eyes,
    Brows,
    Jaw,
    Lips,
    Cheeks,
    Nose,
    Chin,
}

impl fmt::Display for FacialRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FacialRegion::Eyes => "eyes",
            FacialRegion::Brows => "brows",
            FacialRegion::Jaw => "jaw",
            FacialRegion::Lips => "lips",
            FacialRegion::Cheeks => "cheeks",
            FacialRegion::Nose => "nose",
            FacialRegion::Chin => "chin",
        };
        write!(f, "{name}")
    }
}

/// Metadata for one AU: canonical 0-based name, region, and the legacy
/// 1-based dataset name kept as an alias.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuDescriptor {
    pub index: usize,
    pub name: String,
    pub region: FacialRegion,
    pub alias: String,
}

/// The full 24-descriptor taxonomy, ordered by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuTaxonomy {
    descriptors: Vec<AuDescriptor>,
}

static DEFAULT_TAXONOMY: LazyLock<AuTaxonomy> = LazyLock::new(|| {
    AuTaxonomy::from_json_str(include_str!("../assets/taxonomy.json"))
        .expect("embedded taxonomy is valid")
});

impl AuTaxonomy {
    /// Validates a descriptor list: exactly 24, descriptor `i` at position
    /// `i`, names pairwise distinct.
    pub fn new(descriptors: Vec<AuDescriptor>) -> Result<Self> {
        if descriptors.len() != AU_COUNT {
            return Err(Error::schema(format!(
                "taxonomy must list {AU_COUNT} descriptors, got {}",
                descriptors.len()
            )));
        }
        for (position, descriptor) in descriptors.iter().enumerate() {
            if descriptor.index != position {
                return Err(Error::schema(format!(
                    "descriptor at position {position} has index {}",
                    descriptor.index
                )));
            }
        }
        for (i, a) in descriptors.iter().enumerate() {
            for b in &descriptors[i + 1..] {
                if a.name == b.name {
                    return Err(Error::schema(format!("duplicate AU name {:?}", a.name)));
                }
            }
        }
        Ok(Self { descriptors })
    }

    /// The built-in 24-unit taxonomy.
    pub fn default_taxonomy() -> &'static AuTaxonomy {
        &DEFAULT_TAXONOMY
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let descriptors: Vec<AuDescriptor> = serde_json::from_str(json)?;
        Self::new(descriptors)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.descriptors).expect("descriptors serialize")
    }

    /// Descriptor for one AU index.
    pub fn descriptor(&self, index: usize) -> Result<&AuDescriptor> {
        self.descriptors.get(index).ok_or(Error::IndexOutOfRange {
            index,
            max: AU_COUNT - 1,
        })
    }

    pub fn descriptors(&self) -> &[AuDescriptor] {
        &self.descriptors
    }
}

/// Descriptor lookup against the built-in taxonomy.
pub fn au_metadata(index: usize) -> Result<&'static AuDescriptor> {
    AuTaxonomy::default_taxonomy().descriptor(index)
}

/// One emotion category: a canonical lowercase name plus accepted surface
/// forms (e.g. "surprised" also answers to "surprise").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionCategory {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl EmotionCategory {
    pub fn new(name: &str, aliases: &[&str]) -> Self {
        Self {
            name: name.to_lowercase(),
            aliases: aliases.iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    fn matches(&self, lowercase: &str) -> bool {
        self.name == lowercase || self.aliases.iter().any(|a| a == lowercase)
    }
}

/// A configurable emotion label set. Matching is case-insensitive against
/// category names and aliases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmotionTaxonomy {
    categories: Vec<EmotionCategory>,
}

static MEAD_8: LazyLock<EmotionTaxonomy> = LazyLock::new(|| {
    EmotionTaxonomy::new(vec![
        EmotionCategory::new("angry", &["anger"]),
        EmotionCategory::new("contempt", &[]),
        EmotionCategory::new("disgusted", &["disgust"]),
        EmotionCategory::new("fear", &["fearful"]),
        EmotionCategory::new("happy", &["happiness"]),
        EmotionCategory::new("neutral", &[]),
        EmotionCategory::new("sad", &["sadness"]),
        EmotionCategory::new("surprised", &["surprise"]),
    ])
});

static CREMA_6: LazyLock<EmotionTaxonomy> = LazyLock::new(|| {
    EmotionTaxonomy::new(vec![
        EmotionCategory::new("angry", &["anger"]),
        EmotionCategory::new("disgusted", &["disgust"]),
        EmotionCategory::new("fear", &["fearful"]),
        EmotionCategory::new("happy", &["happiness"]),
        EmotionCategory::new("neutral", &[]),
        EmotionCategory::new("sad", &["sadness"]),
    ])
});

impl EmotionTaxonomy {
    pub fn new(categories: Vec<EmotionCategory>) -> Self {
        Self { categories }
    }

    /// The 8-category default label set.
    pub fn mead8() -> &'static EmotionTaxonomy {
        &MEAD_8
    }

    /// The 6-category variant.
    pub fn crema6() -> &'static EmotionTaxonomy {
        &CREMA_6
    }

    /// Builds a taxonomy from bare label names (no aliases).
    pub fn from_labels(labels: &[&str]) -> Self {
        Self::new(
            labels
                .iter()
                .map(|label| EmotionCategory::new(label, &[]))
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let categories: Vec<EmotionCategory> = serde_json::from_str(&text)?;
        Ok(Self::new(categories))
    }

    pub fn categories(&self) -> &[EmotionCategory] {
        &self.categories
    }

    pub fn contains(&self, label: &str) -> bool {
        let lowercase = label.to_lowercase();
        self.categories.iter().any(|c| c.matches(&lowercase))
    }

    /// Canonical category name a label maps to, if any.
    pub fn canonical(&self, label: &str) -> Option<&str> {
        let lowercase = label.to_lowercase();
        self.categories
            .iter()
            .find(|c| c.matches(&lowercase))
            .map(|c| c.name.as_str())
    }
}

impl Default for EmotionTaxonomy {
    fn default() -> Self {
        Self::mead8().clone()
    }
}

/// A validated emotion label, stored lowercase in the surface form it was
/// given (so serialized text round-trips byte-exactly).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmotionLabel(String);

impl EmotionLabel {
    pub fn new(label: &str, taxonomy: &EmotionTaxonomy) -> Result<Self> {
        if taxonomy.contains(label) {
            Ok(Self(label.to_lowercase()))
        } else {
            Err(Error::UnknownEmotion {
                label: label.to_string(),
            })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
