//! PGM (P2/P5), PPM (P3/P6) and grayscale PFM.

use std::fs;
use std::path::Path;

use gup_core::{Image, RgbImage};

use crate::FormatError;

/// Output encodings for [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary 16-bit PGM.
    Pgm16,
    /// Little-endian grayscale PFM.
    Pfm,
}

impl ImageFormat {
    /// Picks the format from a file extension, defaulting to PFM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => Self::Pgm16,
            _ => Self::Pfm,
        }
    }
}

/// Byte cursor over a netpbm header.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::Header("unexpected end of header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| FormatError::Header("non-ASCII header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        let t = self.token()?;
        t.parse().map_err(|_| FormatError::Header(format!("bad {what}: {t:?}")))
    }

    /// Consumes the single whitespace byte that ends a binary header.
    fn end_of_header(&mut self) -> Result<&'a [u8], FormatError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(FormatError::Header("missing separator before raster".into())),
        }
    }
}

fn dims_and_maxval(h: &mut Header<'_>) -> Result<(usize, usize, u32), FormatError> {
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::Header("zero-sized image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::Header(format!("maxval {maxval} out of range")));
    }
    Ok((width, height, maxval as u32))
}

/// Reads `count` samples, ASCII or big-endian binary.
fn samples(h: &mut Header<'_>, ascii: bool, maxval: u32, count: usize) -> Result<Vec<f64>, FormatError> {
    let scale = f64::from(maxval);
    let mut out = Vec::with_capacity(count);
    if ascii {
        for _ in 0..count {
            let v = h.number("sample").map_err(|e| FormatError::Payload(e.to_string()))?;
            if v > maxval as usize {
                return Err(FormatError::Payload(format!("sample {v} exceeds maxval {maxval}")));
            }
            out.push(v as f64 / scale);
        }
        return Ok(out);
    }
    let raster = h.end_of_header()?;
    let width = if maxval < 256 { 1 } else { 2 };
    if raster.len() != count * width {
        return Err(FormatError::Payload(format!("expected {} raster bytes, found {}", count * width, raster.len())));
    }
    for chunk in raster.chunks_exact(width) {
        let v = if width == 1 { u32::from(chunk[0]) } else { u32::from(u16::from_be_bytes([chunk[0], chunk[1]])) };
        if v > maxval {
            return Err(FormatError::Payload(format!("sample {v} exceeds maxval {maxval}")));
        }
        out.push(f64::from(v) / scale);
    }
    Ok(out)
}

fn parse_pfm(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut h = Header::new(bytes);
    let magic = h.token()?;
    if magic == "PF" {
        return Err(FormatError::Unsupported("color PFM".into()));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let scale_tok = h.token()?;
    let scale: f64 = scale_tok.parse().map_err(|_| FormatError::Header(format!("bad PFM scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(FormatError::Header("PFM scale must be non-zero".into()));
    }
    let little = scale < 0.0;
    let raster = h.end_of_header()?;
    if width == 0 || height == 0 {
        return Err(FormatError::Header("zero-sized image".into()));
    }
    if raster.len() != width * height * 4 {
        return Err(FormatError::Payload(format!("expected {} raster bytes, found {}", width * height * 4, raster.len())));
    }
    let mut data = vec![0.0; width * height];
    // Rows are stored bottom-up.
    for (k, chunk) in raster.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        if !v.is_finite() {
            return Err(FormatError::NonFinite);
        }
        let (row, col) = (height - 1 - k / width, k % width);
        data[row * width + col] = f64::from(v);
    }
    Ok(Image::new(height, width, data)?)
}

/// Parses a PGM or grayscale PFM held in memory.
pub fn decode_image(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut h = Header::new(bytes);
    match h.token()? {
        m @ ("P2" | "P5") => {
            let (width, height, maxval) = dims_and_maxval(&mut h)?;
            let data = samples(&mut h, m == "P2", maxval, width * height)?;
            Ok(Image::new(height, width, data)?)
        }
        "Pf" | "PF" => parse_pfm(bytes),
        other => Err(FormatError::Unsupported(format!("magic {other:?}"))),
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image, FormatError> {
    decode_image(&fs::read(path)?)
}

/// `round(clamp(v, 0, 1) · 65535)` with halves rounded up.
pub fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0 + 0.5).floor() as u16
}

pub fn encode_image(img: &Image, format: ImageFormat) -> Vec<u8> {
    let (h, w) = img.dims();
    match format {
        ImageFormat::Pgm16 => {
            let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
            for &v in img.data() {
                out.extend_from_slice(&quantize16(v).to_be_bytes());
            }
            out
        }
        ImageFormat::Pfm => {
            let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
            for row in (0..h).rev() {
                for &v in &img.data()[row * w..(row + 1) * w] {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            out
        }
    }
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<(), FormatError> {
    fs::write(path, encode_image(img, format))?;
    Ok(())
}

/// Parses a P3/P6 color image; grayscale inputs are replicated to RGB.
pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage, FormatError> {
    let mut h = Header::new(bytes);
    match h.token()? {
        m @ ("P3" | "P6") => {
            let (width, height, maxval) = dims_and_maxval(&mut h)?;
            let data = samples(&mut h, m == "P3", maxval, width * height * 3)?;
            let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            Ok(RgbImage::new(height, width, pixels)?)
        }
        _ => {
            let gray = decode_image(bytes)?;
            Ok(RgbImage::from_fn(gray.height(), gray.width(), |r, c| {
                let v = gray.get(r, c);
                [v, v, v]
            })?)
        }
    }
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage, FormatError> {
    decode_rgb(&fs::read(path)?)
}

/// Binary 16-bit PPM.
pub fn encode_rgb(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for px in img.pixels() {
        for &v in px {
            out.extend_from_slice(&quantize16(v).to_be_bytes());
        }
    }
    out
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, encode_rgb(img))?;
    Ok(())
}
