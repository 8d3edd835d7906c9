//! PNG encoding and decoding for binary crops and raw RGB renders.
//!
//! Encoder settings are pinned so identical pixels always produce identical
//! bytes. Decoding walks the chunk structure first (lengths, CRCs, ordering)
//! so malformed files are reported with the byte offset of the problem.

use std::io::Cursor;

use crate::error::{Error, Result};
use crate::projection::{BinaryImage, RawImage};

const SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Row filter applied to every scanline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RowFilter {
    None,
    Sub,
    #[default]
    Up,
    Avg,
    Paeth,
}

impl RowFilter {
    pub fn name(self) -> &'static str {
        match self {
            RowFilter::None => "none",
            RowFilter::Sub => "sub",
            RowFilter::Up => "up",
            RowFilter::Avg => "avg",
            RowFilter::Paeth => "paeth",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => RowFilter::None,
            "sub" => RowFilter::Sub,
            "up" => RowFilter::Up,
            "avg" => RowFilter::Avg,
            "paeth" => RowFilter::Paeth,
            other => return Err(Error::invalid(format!("unknown PNG filter `{other}`"))),
        })
    }

    fn to_png(self) -> png::Filter {
        match self {
            RowFilter::None => png::Filter::NoFilter,
            RowFilter::Sub => png::Filter::Sub,
            RowFilter::Up => png::Filter::Up,
            RowFilter::Avg => png::Filter::Avg,
            RowFilter::Paeth => png::Filter::Paeth,
        }
    }
}

/// Pinned encoder parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PngSettings {
    /// zlib level, 1..=9.
    pub level: u8,
    pub filter: RowFilter,
}

impl Default for PngSettings {
    fn default() -> Self {
        Self { level: 6, filter: RowFilter::Up }
    }
}

impl PngSettings {
    pub fn validate(&self) -> Result<()> {
        if !(1..=9).contains(&self.level) {
            return Err(Error::invalid(format!("PNG level {} outside 1..=9", self.level)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageKind {
    Grayscale8,
    Rgb8,
}

/// A decoded file: grayscale files come back as (unvalidated) binary images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodedImage {
    Gray(BinaryImage),
    Rgb(RawImage),
}

impl DecodedImage {
    pub fn kind(&self) -> ImageKind {
        match self {
            DecodedImage::Gray(_) => ImageKind::Grayscale8,
            DecodedImage::Rgb(_) => ImageKind::Rgb8,
        }
    }
}

fn encode(side: u32, color: png::ColorType, data: &[u8], settings: &PngSettings) -> Result<Vec<u8>> {
    settings.validate()?;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, side, side);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_deflate_compression(png::DeflateCompression::Level(settings.level));
        enc.set_filter(settings.filter.to_png());
        let mut writer = enc.write_header().map_err(|e| Error::Encode(e.to_string()))?;
        writer.write_image_data(data).map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// 8-bit grayscale, no alpha, no interlacing.
pub fn encode_binary(image: &BinaryImage, settings: &PngSettings) -> Result<Vec<u8>> {
    encode(image.side(), png::ColorType::Grayscale, image.pixels(), settings)
}

/// 8-bit RGB, no alpha, no interlacing.
pub fn encode_raw(image: &RawImage, settings: &PngSettings) -> Result<Vec<u8>> {
    encode(image.side(), png::ColorType::Rgb, image.pixels(), settings)
}

/// Checks signature, chunk framing, CRCs and chunk order. Returns the offset
/// of the first IDAT chunk.
fn check_structure(bytes: &[u8]) -> Result<usize> {
    let fail = |offset: usize, reason: &str| Error::Decode { offset, reason: reason.to_string() };
    if bytes.len() < SIGNATURE.len() {
        return Err(fail(bytes.len(), "truncated signature"));
    }
    if let Some(i) = SIGNATURE.iter().zip(bytes).position(|(a, b)| a != b) {
        return Err(fail(i, "bad PNG signature"));
    }
    let mut pos = SIGNATURE.len();
    let mut first_idat = None;
    let mut seen_ihdr = false;
    loop {
        if pos + 8 > bytes.len() {
            return Err(fail(pos, "truncated chunk header"));
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind = &bytes[pos + 4..pos + 8];
        let end = pos
            .checked_add(12)
            .and_then(|p| p.checked_add(len))
            .ok_or_else(|| fail(pos, "chunk length overflow"))?;
        if end > bytes.len() {
            return Err(fail(pos, "chunk extends past end of file"));
        }
        let stored = u32::from_be_bytes(bytes[end - 4..end].try_into().unwrap());
        if crc32fast::hash(&bytes[pos + 4..end - 4]) != stored {
            return Err(fail(end - 4, "chunk CRC mismatch"));
        }
        match kind {
            b"IHDR" => {
                if seen_ihdr || pos != SIGNATURE.len() {
                    return Err(fail(pos, "IHDR must be the first and only header chunk"));
                }
                seen_ihdr = true;
            }
            _ if !seen_ihdr => return Err(fail(pos, "missing IHDR")),
            b"IDAT" => {
                first_idat.get_or_insert(pos);
            }
            b"IEND" => {
                if end != bytes.len() {
                    return Err(fail(end, "trailing bytes after IEND"));
                }
                return first_idat.ok_or_else(|| fail(pos, "no IDAT chunk"));
            }
            _ => {}
        }
        pos = end;
    }
}

/// Decodes a grayscale or RGB 8-bit PNG.
pub fn decode(bytes: &[u8]) -> Result<DecodedImage> {
    let idat = check_structure(bytes)?;
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode { offset: SIGNATURE.len(), reason: e.to_string() })?;
    let info = reader.info();
    let (width, height) = (info.width, info.height);
    let color = info.color_type;
    let depth = info.bit_depth;
    if width != height {
        return Err(Error::Decode { offset: SIGNATURE.len(), reason: "image is not square".into() });
    }
    if depth != png::BitDepth::Eight || info.interlaced {
        return Err(Error::Decode {
            offset: SIGNATURE.len(),
            reason: "only non-interlaced 8-bit images are supported".into(),
        });
    }
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode { offset: idat, reason: e.to_string() })?;
    match color {
        png::ColorType::Grayscale => {
            buf.truncate((width as usize).pow(2));
            Ok(DecodedImage::Gray(BinaryImage::from_pixels_unchecked(width, buf)?))
        }
        png::ColorType::Rgb => {
            buf.truncate(3 * (width as usize).pow(2));
            Ok(DecodedImage::Rgb(RawImage::from_pixels(width, buf)?))
        }
        other => Err(Error::Decode {
            offset: SIGNATURE.len(),
            reason: format!("unsupported color type {other:?}"),
        }),
    }
}

/// Decodes a cropped image and enforces the {0, 255} invariant.
pub fn decode_binary(bytes: &[u8]) -> Result<BinaryImage> {
    match decode(bytes)? {
        DecodedImage::Gray(img) => match img.first_non_binary() {
            Some(pixel) => Err(Error::NonBinaryPixel { pixel, value: img.pixels()[pixel] }),
            None => Ok(img),
        },
        DecodedImage::Rgb(_) => Err(Error::invalid("expected a grayscale image, found RGB")),
    }
}

pub fn decode_raw(bytes: &[u8]) -> Result<RawImage> {
    match decode(bytes)? {
        DecodedImage::Rgb(img) => Ok(img),
        DecodedImage::Gray(_) => Err(Error::invalid("expected an RGB image, found grayscale")),
    }
}
