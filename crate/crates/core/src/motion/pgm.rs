//! Binary PGM (P5, maxval 255) reading and writing.

use std::fs;
use std::path::Path;

use super::{FrameGray, MotionError};

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Decodes a P5 image; pixels are scaled to [0, 1] by 1/255.
pub fn decode_pgm(bytes: &[u8], source: &Path) -> Result<FrameGray, MotionError> {
    let bad = |reason: String| MotionError::Pgm {
        path: source.to_path_buf(),
        reason,
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(MotionError::UnsupportedFormat {
            path: source.to_path_buf(),
            magic,
        });
    }
    let mut pos = 2;
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| bad(format!("missing {name}")))?;
        *slot = tok
            .parse()
            .map_err(|_| bad(format!("cannot parse {name} {tok:?}")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(bad(format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(MotionError::UnsupportedFormat {
            path: source.to_path_buf(),
            magic: format!("P5 with maxval {maxval}"),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(MotionError::Payload {
            path: source.to_path_buf(),
            expected: width * height,
            actual: 0,
        });
    }
    let payload = &bytes[pos + 1..];
    if payload.len() != width * height {
        return Err(MotionError::Payload {
            path: source.to_path_buf(),
            expected: width * height,
            actual: payload.len(),
        });
    }
    let pixels = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    FrameGray::new(width, height, pixels)
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<FrameGray, MotionError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| MotionError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pgm(&bytes, path)
}

/// Quantises to 8 bits (`round(p·255)`).
pub fn encode_pgm(frame: &FrameGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.pixels().iter().map(|p| (p * 255.0).round() as u8));
    out
}

pub fn save_frame(path: impl AsRef<Path>, frame: &FrameGray) -> Result<(), MotionError> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(frame)).map_err(|source| MotionError::Io {
        path: path.to_path_buf(),
        source,
    })
}
