//! Binary Netpbm I/O: P6 (PPM) frames and P5 (PGM) masks, 8-bit only.
//! https://netpbm.sourceforge.net/doc/ppm.html

use std::io::{self, Write};

use thiserror::Error;

use super::{BinaryMask, FrameRgb};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("bad magic {found:?}, expected {expected}")]
    BadMagic { expected: &'static str, found: String },

    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: usize, reason: String },

    #[error("unsupported maxval {0}, only 255 is supported")]
    MaxVal(u32),

    #[error("truncated pixel data: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error(transparent)]
    Imaging(#[from] super::ImagingError),

    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Header {
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], magic: &'static str) -> Result<Header, PnmError> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(PnmError::BadMagic {
            expected: magic,
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        });
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
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
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(PnmError::Header {
                offset: pos,
                reason: "expected a decimal number".into(),
            });
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::Header {
                offset: start,
                reason: "number out of range".into(),
            })?;
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(PnmError::Header {
                offset: pos,
                reason: "missing whitespace after maxval".into(),
            })
        }
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(PnmError::MaxVal(maxval));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        data_offset: pos,
    })
}

fn pixel_data(bytes: &[u8], header: &Header, channels: usize) -> Result<Vec<u8>, PnmError> {
    let expected = header.width * header.height * channels;
    let actual = bytes.len() - header.data_offset;
    if actual < expected {
        return Err(PnmError::Truncated { expected, actual });
    }
    Ok(bytes[header.data_offset..header.data_offset + expected].to_vec())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<FrameRgb, PnmError> {
    let header = parse_header(bytes, "P6")?;
    let data = pixel_data(bytes, &header, 3)?;
    Ok(FrameRgb::new(header.width, header.height, data)?)
}

/// Decodes a P5 image as a mask; any nonzero gray level is foreground.
pub fn decode_pgm_mask(bytes: &[u8]) -> Result<BinaryMask, PnmError> {
    let header = parse_header(bytes, "P5")?;
    let data = pixel_data(bytes, &header, 1)?;
    Ok(BinaryMask::from_bytes(header.width, header.height, data)?)
}

pub fn encode_ppm(frame: &FrameRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

/// P5 with 0 -> 0 and 1 -> 255.
pub fn encode_pgm_mask(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.as_bytes().iter().map(|&b| b * 255));
    out
}

pub fn write_ppm(frame: &FrameRgb, mut w: impl Write) -> io::Result<()> {
    w.write_all(&encode_ppm(frame))
}

pub fn write_pgm_mask(mask: &BinaryMask, mut w: impl Write) -> io::Result<()> {
    w.write_all(&encode_pgm_mask(mask))
}

pub fn read_ppm_file(path: impl AsRef<std::path::Path>) -> Result<FrameRgb, PnmError> {
    decode_ppm(&std::fs::read(path)?)
}
