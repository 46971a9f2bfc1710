//! 2D facial representations of AU frames: a canonical 68-point landmark
//! template, linear per-AU displacement bases (the blendshape formulation),
//! and rasterization to keypoint or line-drawing images.
//!
//! Landmark coordinates live in the unit square with y increasing downward,
//! matching raster conventions. The 68-point layout is the usual one: jaw
//! 0-16, brows 17-26, nose 27-35, eyes 36-47, outer lip 48-59, inner lip
//! 60-67.

mod raster;

pub use raster::{rasterize, GrayImage, RasterImage, RenderMode};

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use crate::au::{AuSequence, AuTaxonomy, AuVector, FacialRegion, AU_COUNT};
use crate::error::{Error, Result};

/// Number of landmark points.
pub const LANDMARK_COUNT: usize = 68;

/// One frame of 68 (x, y) landmark coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    points: Vec<(f64, f64)>,
}

impl LandmarkFrame {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::BadLength {
                expected: LANDMARK_COUNT,
                actual: points.len(),
            });
        }
        for (index, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::ValueOutOfRange { index, value: x });
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Left-half and midline template coordinates; the right half is mirrored
/// about x = 0.5 so the template is exactly symmetric.
const TEMPLATE_LEFT: &[(usize, f64, f64)] = &[
    // jaw contour down to the chin
    (0, 0.140, 0.400),
    (1, 0.148, 0.480),
    (2, 0.162, 0.560),
    (3, 0.182, 0.636),
    (4, 0.212, 0.706),
    (5, 0.256, 0.768),
    (6, 0.312, 0.820),
    (7, 0.392, 0.864),
    (8, 0.500, 0.892),
    // left brow
    (17, 0.200, 0.330),
    (18, 0.258, 0.302),
    (19, 0.322, 0.294),
    (20, 0.386, 0.306),
    (21, 0.442, 0.330),
    // nose bridge and left half of the base
    (27, 0.500, 0.380),
    (28, 0.500, 0.440),
    (29, 0.500, 0.500),
    (30, 0.500, 0.560),
    (31, 0.430, 0.600),
    (32, 0.464, 0.612),
    (33, 0.500, 0.620),
    // left eye: outer corner, upper lid, inner corner, lower lid
    (36, 0.240, 0.410),
    (37, 0.282, 0.392),
    (38, 0.330, 0.392),
    (39, 0.370, 0.412),
    (40, 0.328, 0.430),
    (41, 0.280, 0.430),
    // outer lip: left corner, upper left, top center, bottom center, lower left
    (48, 0.380, 0.740),
    (49, 0.424, 0.716),
    (50, 0.468, 0.704),
    (51, 0.500, 0.710),
    (57, 0.500, 0.786),
    (58, 0.464, 0.782),
    (59, 0.424, 0.766),
    // inner lip
    (60, 0.404, 0.740),
    (61, 0.458, 0.730),
    (62, 0.500, 0.732),
    (66, 0.500, 0.756),
    (67, 0.458, 0.752),
];

/// (left index, right index) mirror pairs.
const TEMPLATE_MIRROR: &[(usize, usize)] = &[
    (0, 16),
    (1, 15),
    (2, 14),
    (3, 13),
    (4, 12),
    (5, 11),
    (6, 10),
    (7, 9),
    (17, 26),
    (18, 25),
    (19, 24),
    (20, 23),
    (21, 22),
    (31, 35),
    (32, 34),
    (36, 45),
    (37, 44),
    (38, 43),
    (39, 42),
    (40, 47),
    (41, 46),
    (48, 54),
    (49, 53),
    (50, 52),
    (59, 55),
    (58, 56),
    (60, 64),
    (61, 63),
    (67, 65),
];

static TEMPLATE: LazyLock<LandmarkFrame> = LazyLock::new(|| {
    let mut points = vec![(f64::NAN, f64::NAN); LANDMARK_COUNT];
    for &(index, x, y) in TEMPLATE_LEFT {
        points[index] = (x, y);
    }
    for &(left, right) in TEMPLATE_MIRROR {
        let (x, y) = points[left];
        points[right] = (1.0 - x, y);
    }
    LandmarkFrame::new(points).expect("template covers all 68 points")
});

/// The embedded neutral 68-point layout.
pub fn canonical_template() -> LandmarkFrame {
    TEMPLATE.clone()
}

/// Landmark indices belonging to a facial region. Jaw includes the mouth
/// points (jaw motion carries the lower face); chin and cheeks are subsets
/// of the lower contour plus the lip points they pull on.
pub fn region_points(region: FacialRegion) -> Vec<usize> {
    let ranges: &[std::ops::RangeInclusive<usize>] = match region {
        FacialRegion::Eyes => &[36..=47],
        FacialRegion::Brows => &[17..=26],
        FacialRegion::Nose => &[27..=35],
        FacialRegion::Lips => &[48..=67],
        FacialRegion::Jaw => &[0..=16, 48..=67],
        FacialRegion::Chin => &[5..=11, 55..=59, 65..=67],
        FacialRegion::Cheeks => &[1..=6, 10..=15],
    };
    ranges.iter().cloned().flatten().collect()
}

/// Unit-intensity displacement entry: point index plus its (dx, dy) at full
/// activation.
pub type DisplacementEntry = (usize, f64, f64);

/// Per-AU linear displacement basis. Displacing point p under frame v gives
/// `p + sum_i v_i * (dx, dy)_{i,p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementBasis {
    entries: Vec<Vec<DisplacementEntry>>,
}

static DEFAULT_BASIS: LazyLock<DisplacementBasis> = LazyLock::new(|| {
    DisplacementBasis::from_json_str(
        include_str!("../../assets/default_basis.json"),
        AuTaxonomy::default_taxonomy(),
    )
    .expect("embedded basis is valid")
});

impl DisplacementBasis {
    /// Validates entries for all 24 AUs: point indices in range, finite
    /// displacements, and every displaced point inside the AU's declared
    /// facial region.
    pub fn new(entries: Vec<Vec<DisplacementEntry>>, taxonomy: &AuTaxonomy) -> Result<Self> {
        if entries.len() != AU_COUNT {
            return Err(Error::schema(format!(
                "basis must cover {AU_COUNT} AUs, got {}",
                entries.len()
            )));
        }
        for (au, list) in entries.iter().enumerate() {
            let region = taxonomy.descriptor(au)?.region;
            let allowed = region_points(region);
            for &(point, dx, dy) in list {
                if point >= LANDMARK_COUNT {
                    return Err(Error::IndexOutOfRange {
                        index: point,
                        max: LANDMARK_COUNT - 1,
                    });
                }
                if !dx.is_finite() || !dy.is_finite() {
                    return Err(Error::schema(format!(
                        "AU {au}: non-finite displacement for point {point}"
                    )));
                }
                if !allowed.contains(&point) {
                    return Err(Error::schema(format!(
                        "AU {au}: point {point} outside its {region} region"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// The embedded hand-authored basis.
    pub fn default_basis() -> &'static DisplacementBasis {
        &DEFAULT_BASIS
    }

    /// Parses the JSON mapping `AU index -> [[point, dx, dy], ...]`.
    pub fn from_json_str(json: &str, taxonomy: &AuTaxonomy) -> Result<Self> {
        let raw: BTreeMap<String, Vec<(usize, f64, f64)>> = serde_json::from_str(json)?;
        let mut entries = vec![Vec::new(); AU_COUNT];
        for (key, list) in raw {
            let au: usize = key
                .parse()
                .map_err(|_| Error::schema(format!("bad AU key {key:?}")))?;
            if au >= AU_COUNT {
                return Err(Error::BadIndex { index: au as i64 });
            }
            entries[au] = list;
        }
        Self::new(entries, taxonomy)
    }

    pub fn from_file(path: impl AsRef<Path>, taxonomy: &AuTaxonomy) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?, taxonomy)
    }

    pub fn entries(&self, au: usize) -> &[DisplacementEntry] {
        &self.entries[au]
    }
}

/// Displaces the template by the weighted sum of per-AU displacements. With
/// `clamp` set, coordinates are clipped to the unit square.
pub fn apply_aus(
    template: &LandmarkFrame,
    basis: &DisplacementBasis,
    frame: &AuVector,
    clamp: bool,
) -> LandmarkFrame {
    let mut points = template.points().to_vec();
    for au in 0..AU_COUNT {
        let intensity = frame[au];
        if intensity == 0.0 {
            continue;
        }
        for &(point, dx, dy) in basis.entries(au) {
            points[point].0 += intensity * dx;
            points[point].1 += intensity * dy;
        }
    }
    if clamp {
        for point in &mut points {
            point.0 = point.0.clamp(0.0, 1.0);
            point.1 = point.1.clamp(0.0, 1.0);
        }
    }
    LandmarkFrame::new(points).expect("finite displacements keep points finite")
}

/// Maps every frame of a dense sequence through [`apply_aus`].
pub fn map_sequence(
    seq: &AuSequence,
    basis: &DisplacementBasis,
    clamp: bool,
) -> Result<Vec<LandmarkFrame>> {
    let frames = seq.dense_frames()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let template = canonical_template();
    Ok(frames
        .iter()
        .map(|frame| apply_aus(&template, basis, frame, clamp))
        .collect())
}

/// Serializes frames as a JSON list of 68-point [x, y] lists.
pub fn landmarks_to_json(frames: &[LandmarkFrame]) -> String {
    let raw: Vec<Vec<[f64; 2]>> = frames
        .iter()
        .map(|f| f.points().iter().map(|&(x, y)| [x, y]).collect())
        .collect();
    serde_json::to_string(&raw).expect("landmark frames serialize")
}

pub fn landmarks_from_json_str(json: &str) -> Result<Vec<LandmarkFrame>> {
    let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(json)?;
    raw.into_iter()
        .map(|points| LandmarkFrame::new(points.into_iter().map(|[x, y]| (x, y)).collect()))
        .collect()
}

pub fn landmarks_from_file(path: impl AsRef<Path>) -> Result<Vec<LandmarkFrame>> {
    landmarks_from_json_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_has_expected_region_counts() {
        let template = canonical_template();
        assert_eq!(template.points().len(), 68);
        // jaw 17, brows 10, nose 9, eyes 12, lips 20
        assert_eq!(region_points(FacialRegion::Brows).len(), 10);
        assert_eq!(region_points(FacialRegion::Nose).len(), 9);
        assert_eq!(region_points(FacialRegion::Eyes).len(), 12);
        assert_eq!(region_points(FacialRegion::Lips).len(), 20);
        for &(x, y) in template.points() {
            assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn template_is_symmetric_and_deterministic() {
        let template = canonical_template();
        let points = template.points();
        assert!((points[36].0 - (1.0 - points[45].0)).abs() < 1e-9);
        for &(left, right) in TEMPLATE_MIRROR {
            assert!((points[left].0 - (1.0 - points[right].0)).abs() < 1e-9);
            assert_eq!(points[left].1, points[right].1);
        }
        assert_eq!(template, canonical_template());
    }

    #[test]
    fn zero_frame_leaves_template_unchanged() {
        let template = canonical_template();
        let moved = apply_aus(
            &template,
            DisplacementBasis::default_basis(),
            &AuVector::zeros(),
            false,
        );
        assert_eq!(moved, template);
    }

    #[test]
    fn displacement_scales_linearly() {
        let taxonomy = AuTaxonomy::default_taxonomy();
        let mut entries = vec![Vec::new(); AU_COUNT];
        entries[8] = vec![(57, 0.0, 0.02)];
        let basis = DisplacementBasis::new(entries, taxonomy).unwrap();
        let template = canonical_template();

        let mut values = [0.0; AU_COUNT];
        values[8] = 0.5;
        let half = apply_aus(&template, &basis, &AuVector::new(values).unwrap(), false);
        assert!((half.points()[57].1 - (template.points()[57].1 + 0.01)).abs() < 1e-12);
        assert_eq!(half.points()[56], template.points()[56]);

        values[8] = 0.3;
        let lo = apply_aus(&template, &basis, &AuVector::new(values).unwrap(), false);
        values[8] = 0.6;
        let hi = apply_aus(&template, &basis, &AuVector::new(values).unwrap(), false);
        let d_lo = lo.points()[57].1 - template.points()[57].1;
        let d_hi = hi.points()[57].1 - template.points()[57].1;
        assert!((d_hi - 2.0 * d_lo).abs() < 1e-12);
    }

    #[test]
    fn default_basis_respects_regions() {
        let taxonomy = AuTaxonomy::default_taxonomy();
        let basis = DisplacementBasis::default_basis();
        for au in 0..AU_COUNT {
            let allowed = region_points(taxonomy.descriptor(au).unwrap().region);
            assert!(!basis.entries(au).is_empty(), "AU {au} has no entries");
            for &(point, _, _) in basis.entries(au) {
                assert!(allowed.contains(&point), "AU {au} touches point {point}");
            }
        }
    }

    #[test]
    fn basis_rejects_out_of_region_points() {
        let taxonomy = AuTaxonomy::default_taxonomy();
        let mut entries = vec![Vec::new(); AU_COUNT];
        entries[0] = vec![(8, 0.0, 0.01)]; // chin point under an eye AU
        assert!(DisplacementBasis::new(entries, taxonomy).is_err());
    }

    #[test]
    fn map_sequence_is_per_frame() {
        let seq = AuSequence::dense(5.0, vec![AuVector::zeros(); 3]).unwrap();
        let frames = map_sequence(&seq, DisplacementBasis::default_basis(), true).unwrap();
        assert_eq!(frames.len(), 3);
        let template = canonical_template();
        assert!(frames.iter().all(|f| *f == template));

        let empty = AuSequence::dense(5.0, vec![]).unwrap();
        assert!(matches!(
            map_sequence(&empty, DisplacementBasis::default_basis(), true),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn landmark_json_roundtrip() {
        let frames = vec![canonical_template(); 2];
        let json = landmarks_to_json(&frames);
        assert_eq!(landmarks_from_json_str(&json).unwrap(), frames);
    }
}
