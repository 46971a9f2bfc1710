//! Rasterization of landmark frames to binary line drawings, plus the
//! grayscale image type and PGM (P5) I/O shared with the image metrics.

use std::io::{Read, Write};
use std::path::Path;

use super::LandmarkFrame;
use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::BadLength {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Writes the image as binary PGM (P5), maxval 255.
    pub fn write_pgm(&self, writer: &mut impl Write) -> Result<()> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn write_pgm_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_pgm(&mut file)
    }

    /// Reads a binary PGM (P5) image with maxval up to 255.
    pub fn read_pgm(reader: &mut impl Read) -> Result<Self> {
        let mut data = Vec::new();
        reader.read_to_end(&mut data)?;
        if !data.starts_with(b"P5") {
            return Err(Error::corrupt("not a P5 PGM file"));
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for field in &mut fields {
            // skip whitespace and '#' comment lines between header fields
            loop {
                match data.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while data.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    Some(_) => break,
                    None => return Err(Error::corrupt("truncated PGM header")),
                }
            }
            let start = pos;
            while data.get(pos).is_some_and(|b| b.is_ascii_digit()) {
                pos += 1;
            }
            let token = std::str::from_utf8(&data[start..pos]).expect("digits");
            *field = token
                .parse()
                .map_err(|_| Error::corrupt("bad PGM header field"))?;
        }
        let [width, height, maxval] = fields;
        if maxval == 0 || maxval > 255 {
            return Err(Error::corrupt(format!("unsupported PGM maxval {maxval}")));
        }
        match data.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(Error::corrupt("missing whitespace after PGM maxval")),
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::corrupt("PGM dimensions overflow"))?;
        let payload = &data[pos..];
        if payload.len() != expected {
            return Err(Error::corrupt(format!(
                "PGM payload is {} bytes, expected {expected}",
                payload.len()
            )));
        }
        Self::new(width, height, payload.to_vec())
    }

    pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        Self::read_pgm(&mut file)
    }
}

/// A binary line drawing: every pixel is 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    image: GrayImage,
}

impl RasterImage {
    pub fn new(image: GrayImage) -> Result<Self> {
        if let Some(&bad) = image.pixels().iter().find(|&&p| p != 0 && p != 255) {
            return Err(Error::schema(format!(
                "raster pixels must be 0 or 255, found {bad}"
            )));
        }
        Ok(Self { image })
    }

    pub fn gray(&self) -> &GrayImage {
        &self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn pixels(&self) -> &[u8] {
        self.image.pixels()
    }

    pub fn lit_count(&self) -> usize {
        self.image.pixels().iter().filter(|&&p| p == 255).count()
    }

    pub fn write_pgm_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.image.write_pgm_file(path)
    }
}

/// How a landmark frame is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// One pixel per landmark.
    Lmk,
    /// Region polylines: open jaw/brows/nose, closed eyes and lips.
    Rom,
}

/// Open polylines drawn in RoM mode.
const OPEN_PATHS: &[(usize, usize)] = &[(0, 16), (17, 21), (22, 26), (27, 35)];

/// Closed loops drawn in RoM mode.
const CLOSED_PATHS: &[(usize, usize)] = &[(36, 41), (42, 47), (48, 59), (60, 67)];

fn to_pixel(point: (f64, f64), width: usize, height: usize) -> (i64, i64) {
    let px = (point.0 * (width - 1) as f64).round();
    let py = (point.1 * (height - 1) as f64).round();
    (
        (px as i64).clamp(0, width as i64 - 1),
        (py as i64).clamp(0, height as i64 - 1),
    )
}

/// Integer line rasterization; lights every pixel from (x0, y0) to (x1, y1)
/// inclusive.
fn draw_segment(image: &mut GrayImage, from: (i64, i64), to: (i64, i64)) {
    let (mut x, mut y) = from;
    let (x1, y1) = to;
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        image.set(x as usize, y as usize, 255);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_path(
    image: &mut GrayImage,
    frame: &LandmarkFrame,
    first: usize,
    last: usize,
    closed: bool,
) {
    let width = image.width();
    let height = image.height();
    for index in first..last {
        let a = to_pixel(frame.points()[index], width, height);
        let b = to_pixel(frame.points()[index + 1], width, height);
        draw_segment(image, a, b);
    }
    if closed {
        let a = to_pixel(frame.points()[last], width, height);
        let b = to_pixel(frame.points()[first], width, height);
        draw_segment(image, a, b);
    }
}

/// Draws a landmark frame onto a black canvas: one dot per point in `Lmk`
/// mode, the fixed region polylines in `Rom` mode.
pub fn rasterize(
    frame: &LandmarkFrame,
    width: usize,
    height: usize,
    mode: RenderMode,
) -> Result<RasterImage> {
    if width < 8 || height < 8 {
        return Err(Error::BadDimensions { width, height });
    }
    let mut image = GrayImage::filled(width, height, 0);
    match mode {
        RenderMode::Lmk => {
            for &point in frame.points() {
                let (x, y) = to_pixel(point, width, height);
                image.set(x as usize, y as usize, 255);
            }
        }
        RenderMode::Rom => {
            for &(first, last) in OPEN_PATHS {
                draw_path(&mut image, frame, first, last, false);
            }
            for &(first, last) in CLOSED_PATHS {
                draw_path(&mut image, frame, first, last, true);
            }
        }
    }
    RasterImage::new(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::canonical_template;

    #[test]
    fn lmk_mode_lights_at_most_one_pixel_per_point() {
        let image = rasterize(&canonical_template(), 64, 64, RenderMode::Lmk).unwrap();
        let lit = image.lit_count();
        assert!(lit > 0 && lit <= 68, "lit {lit}");
    }

    #[test]
    fn coincident_points_merge_to_one_pixel() {
        let frame = LandmarkFrame::new(vec![(0.5, 0.5); 68]).unwrap();
        let image = rasterize(&frame, 64, 64, RenderMode::Lmk).unwrap();
        assert_eq!(image.lit_count(), 1);
    }

    #[test]
    fn horizontal_segment_lights_span() {
        let mut image = GrayImage::filled(16, 16, 0);
        draw_segment(&mut image, (2, 3), (7, 3));
        let lit: Vec<(usize, usize)> = (0..16)
            .flat_map(|y| (0..16).map(move |x| (x, y)))
            .filter(|&(x, y)| image.get(x, y) == 255)
            .collect();
        assert_eq!(lit, vec![(2, 3), (3, 3), (4, 3), (5, 3), (6, 3), (7, 3)]);
    }

    #[test]
    fn rom_mode_draws_binary_lines() {
        let image = rasterize(&canonical_template(), 64, 64, RenderMode::Rom).unwrap();
        assert!(image.lit_count() > 100);
        assert!(image.pixels().iter().all(|&p| p == 0 || p == 255));
    }

    #[test]
    fn rasterize_is_deterministic() {
        let a = rasterize(&canonical_template(), 48, 48, RenderMode::Rom).unwrap();
        let b = rasterize(&canonical_template(), 48, 48, RenderMode::Rom).unwrap();
        assert_eq!(a.pixels(), b.pixels());
    }

    #[test]
    fn rejects_tiny_canvases() {
        assert!(matches!(
            rasterize(&canonical_template(), 7, 64, RenderMode::Lmk),
            Err(Error::BadDimensions { .. })
        ));
    }

    #[test]
    fn pgm_roundtrip() {
        let image = rasterize(&canonical_template(), 32, 32, RenderMode::Rom).unwrap();
        let mut buffer = Vec::new();
        image.gray().write_pgm(&mut buffer).unwrap();
        assert!(buffer.starts_with(b"P5\n32 32\n255\n"));
        let back = GrayImage::read_pgm(&mut buffer.as_slice()).unwrap();
        assert_eq!(&back, image.gray());
    }

    #[test]
    fn pgm_reader_rejects_garbage() {
        assert!(GrayImage::read_pgm(&mut &b"P6\n2 2\n255\nxxxx"[..]).is_err());
        assert!(GrayImage::read_pgm(&mut &b"P5\n2 2\n255\nxx"[..]).is_err());
        assert!(GrayImage::read_pgm(&mut &b"P5\n"[..]).is_err());
    }
}
