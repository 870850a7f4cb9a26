// SPDX-License-Identifier: Apache-2.0

//! Binary PGM (P5) import and export. Samples map to `[0, 1]` by dividing
//! by `maxval`; export clamps to `[0, 1]` and rounds to the nearest level.

use std::io::{Read, Write};

use super::{DenseTensor, Shape};
use crate::error::{Error, Result};

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Format("not a PNM stream".into()));
    }
    if bytes[1] != b'5' {
        return Err(Error::Format(format!(
            "unsupported PNM variant P{}, only binary P5 is accepted",
            bytes[1] as char
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
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
            return Err(Error::Format("malformed PGM header".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Format(format!("PGM header value {text} too large")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("malformed PGM header".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Format("PGM with zero width or height".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} outside 1..=65535")));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: pos,
    })
}

/// Reads a binary PGM as a rank-2 tensor of shape `(height, width)`.
pub fn import_pgm<R: Read>(mut source: R) -> Result<DenseTensor> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let h = parse_header(&bytes)?;
    let shape = Shape::new(vec![h.height, h.width]).map_err(|e| Error::Format(e.to_string()))?;
    let count = shape.count();
    let wide = h.maxval > 255;
    let need = count * if wide { 2 } else { 1 };
    let raster = &bytes[h.data_start..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "PGM raster truncated: need {need} bytes, got {}",
            raster.len()
        )));
    }
    let scale = f64::from(h.maxval);
    let data = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|p| f64::from(u16::from_be_bytes([p[0], p[1]])) / scale)
            .collect()
    } else {
        raster[..need].iter().map(|&b| f64::from(b) / scale).collect()
    };
    DenseTensor::new(shape, data)
}

/// Writes a rank-2 tensor as binary PGM with the given `maxval`.
pub fn export_pgm<W: Write>(t: &DenseTensor, maxval: u16, mut sink: W) -> Result<()> {
    if t.rank() != 2 {
        return Err(Error::Shape(format!(
            "PGM export needs a rank-2 tensor, got rank {}",
            t.rank()
        )));
    }
    if maxval == 0 {
        return Err(Error::Param("PGM maxval must be positive".into()));
    }
    let (height, width) = (t.shape().dims()[0], t.shape().dims()[1]);
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    let scale = f64::from(maxval);
    for &v in t.data() {
        let level = (v.clamp(0.0, 1.0) * scale).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&level.to_be_bytes());
        } else {
            out.push(level as u8);
        }
    }
    sink.write_all(&out)?;
    sink.flush()?;
    Ok(())
}
