use std::fs;
use std::io::Cursor;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::error::{Error, Result};

/// On-disk raster formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    /// Binary PGM (`P5`, maxval 255).
    Pgm,
}

impl ImageFormat {
    /// Format implied by a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(ImageFormat::Png),
            "pgm" => Some(ImageFormat::Pgm),
            _ => None,
        }
    }
}

/// Reads a PNG or P5 PGM file as an 8-bit grayscale image.
///
/// Colour PNGs are reduced with `round(0.299 R + 0.587 G + 0.114 B)`;
/// alpha is discarded.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes PNG or PGM bytes, sniffing the format from the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        Err(Error::UnsupportedImage("unrecognized file signature".into()))
    }
}

/// Width and height from the file header, without decoding pixel data.
pub fn read_dimensions(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PNG_MAGIC) {
        let reader = png::Decoder::new(Cursor::new(&bytes[..]))
            .read_info()
            .map_err(corrupt)?;
        let info = reader.info();
        non_empty(info.width as usize, info.height as usize)
    } else if bytes.starts_with(b"P5") {
        let header = parse_pgm_header(&bytes)?;
        non_empty(header.width, header.height)
    } else {
        Err(Error::UnsupportedImage("unrecognized file signature".into()))
    }
}

/// Writes `img` to `path`; the parent directory must already exist.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_image(img: &GrayImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Png => encode_png(img),
        ImageFormat::Pgm => Ok(encode_pgm(img)),
    }
}

/// 8-bit grayscale PNG. Output bytes depend only on the pixel data.
pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    png_bytes(img.width(), img.height(), png::ColorType::Grayscale, img.data())
}

/// 8-bit RGB PNG from interleaved `rgb` samples.
pub fn encode_rgb_png(width: usize, height: usize, rgb: &[u8]) -> Result<Vec<u8>> {
    if rgb.len() != width * height * 3 {
        return Err(Error::BufferSize {
            width,
            height,
            actual: rgb.len(),
        });
    }
    png_bytes(width, height, png::ColorType::Rgb, rgb)
}

fn png_bytes(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let encode_err = |e: png::EncodingError| Error::UnsupportedImage(format!("png encode: {e}"));
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(encode_err)?;
        writer.write_image_data(data).map_err(encode_err)?;
        writer.finish().map_err(encode_err)?;
    }
    Ok(out)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

const PNG_MAGIC: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

fn corrupt(e: impl std::fmt::Display) -> Error {
    Error::UnsupportedImage(e.to_string())
}

fn non_empty(width: usize, height: usize) -> Result<(usize, usize)> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    Ok((width, height))
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    // Integer form of round(0.299 R + 0.587 G + 0.114 B); the weights sum
    // to 1000 so the result never exceeds 255.
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedImage("16-bit PNG is not supported".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedImage("png too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (width, height) = non_empty(frame.width as usize, frame.height as usize)?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedImage(format!(
            "unexpected bit depth {:?}",
            frame.bit_depth
        )));
    }
    let line = frame.line_size;
    let mut data = Vec::with_capacity(width * height);
    for row in buf.chunks(line).take(height) {
        match frame.color_type {
            png::ColorType::Grayscale => data.extend_from_slice(&row[..width]),
            png::ColorType::GrayscaleAlpha => data.extend(row.chunks_exact(2).take(width).map(|p| p[0])),
            png::ColorType::Rgb => data.extend(row.chunks_exact(3).take(width).map(|p| luma(p[0], p[1], p[2]))),
            png::ColorType::Rgba => data.extend(row.chunks_exact(4).take(width).map(|p| luma(p[0], p[1], p[2]))),
            png::ColorType::Indexed => {
                return Err(Error::UnsupportedImage("palette not expanded".into()))
            }
        }
    }
    GrayImage::new(width, height, data)
}

struct PgmHeader {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let mut pos = 2; // past "P5"
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::UnsupportedImage("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::UnsupportedImage("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedImage("malformed PGM header".into()))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::UnsupportedImage("malformed PGM header".into()));
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedImage(format!(
            "PGM maxval {maxval} is not supported (expected 255)"
        )));
    }
    Ok(PgmHeader {
        width,
        height,
        data_offset: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let header = parse_pgm_header(bytes)?;
    let (width, height) = non_empty(header.width, header.height)?;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Error::UnsupportedImage("PGM dimensions overflow".into()))?;
    let raster = bytes
        .get(header.data_offset..header.data_offset + len)
        .ok_or_else(|| Error::UnsupportedImage("truncated PGM raster".into()))?;
    GrayImage::new(width, height, raster.to_vec())
}
