// SPDX-License-Identifier: Apache-2.0

//! MELT1 binary tensor encoding.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "MELT" (0x4D 0x45 0x4C 0x54)
//! 4       1           version, 0x01
//! 5       1           rank, 1..=8
//! 6       2           reserved, zero
//! 8       8 * rank    extents, u64 little-endian
//! ...     8 * count   values, f64 little-endian, row-major
//! ```

use std::io::{self, Read, Write};

use super::{DenseTensor, Shape, MAX_RANK};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"MELT";
pub const VERSION: u8 = 1;

fn truncated(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format(format!("truncated MELT1 stream while reading {what}"))
    } else {
        Error::Io(e)
    }
}

pub fn read_tensor<R: Read>(mut source: R) -> Result<DenseTensor> {
    let mut header = [0u8; 8];
    source
        .read_exact(&mut header)
        .map_err(|e| truncated(e, "header"))?;
    if header[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:02x?}", &header[..4])));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let rank = header[5] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    if header[6] != 0 || header[7] != 0 {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }

    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut buf = [0u8; 8];
        source
            .read_exact(&mut buf)
            .map_err(|e| truncated(e, "extents"))?;
        let d = u64::from_le_bytes(buf);
        let d = usize::try_from(d)
            .map_err(|_| Error::Format(format!("extent {d} does not fit in memory")))?;
        dims.push(d);
    }
    let shape = Shape::new(dims).map_err(|e| Error::Format(e.to_string()))?;

    let count = shape.count();
    let mut data = Vec::with_capacity(count.min(1 << 24));
    let mut buf = [0u8; 8];
    for _ in 0..count {
        source
            .read_exact(&mut buf)
            .map_err(|e| truncated(e, "payload"))?;
        data.push(f64::from_le_bytes(buf));
    }
    DenseTensor::new(shape, data)
}

pub fn write_tensor<W: Write>(t: &DenseTensor, mut sink: W) -> Result<()> {
    let mut header = [0u8; 8];
    header[..4].copy_from_slice(&MAGIC);
    header[4] = VERSION;
    header[5] = t.rank() as u8;
    sink.write_all(&header)?;
    for &d in t.shape().dims() {
        sink.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut payload = Vec::with_capacity(t.len() * 8);
    for v in t.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&payload)?;
    sink.flush()?;
    Ok(())
}
