//! IDX image files (the MNIST / FashionMNIST distribution format).
//!
//! Big-endian header `0x00000803, n, rows, cols` followed by `n·rows·cols`
//! unsigned bytes. Pixels are scaled by `1/255` on load.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

fn short(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Length("IDX header truncated".into())
    } else {
        Error::io("<idx stream>", e)
    }
}

/// Parses an IDX image stream. `expected` optionally pins `(rows, cols)`.
pub fn read_idx<R: Read>(
    r: &mut R,
    name: &str,
    split: Split,
    expected: Option<(usize, usize)>,
) -> Result<Dataset> {
    let magic = r.read_u32::<BigEndian>().map_err(short)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "expected IDX image magic 0x{IDX_IMAGE_MAGIC:08x}, found 0x{magic:08x}"
        )));
    }
    let n = r.read_u32::<BigEndian>().map_err(short)? as usize;
    let rows = r.read_u32::<BigEndian>().map_err(short)? as usize;
    let cols = r.read_u32::<BigEndian>().map_err(short)? as usize;
    if n == 0 || rows == 0 || cols == 0 {
        return Err(Error::Format(format!(
            "empty IDX dimensions {n}x{rows}x{cols}"
        )));
    }
    if let Some((er, ec)) = expected {
        if (er, ec) != (rows, cols) {
            return Err(Error::Dimension(format!(
                "IDX images are {rows}x{cols}, expected {er}x{ec}"
            )));
        }
    }
    let want = n * rows * cols;
    let mut bytes = Vec::with_capacity(want);
    r.take(want as u64 + 1)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<idx stream>", e))?;
    if bytes.len() != want {
        return Err(Error::Length(format!(
            "IDX payload holds {}{} bytes, header implies {want}",
            bytes.len().min(want),
            if bytes.len() > want { "+" } else { "" }
        )));
    }
    let pixels = bytes.into_iter().map(|b| f64::from(b) / 255.0).collect();
    Dataset::new(
        name,
        Tensor::new(vec![n, rows * cols], pixels)?,
        rows,
        cols,
        split,
    )
}

pub fn load_idx(path: &Path, split: Split, expected: Option<(usize, usize)>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_idx(&mut std::io::BufReader::new(file), &name, split, expected).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Writes `data` as an IDX image stream, quantising pixels to bytes.
pub fn write_idx<W: Write>(w: &mut W, data: &Dataset) -> Result<()> {
    let io = |e| Error::io("<idx stream>", e);
    w.write_u32::<BigEndian>(IDX_IMAGE_MAGIC).map_err(io)?;
    w.write_u32::<BigEndian>(data.len() as u32).map_err(io)?;
    w.write_u32::<BigEndian>(data.height() as u32).map_err(io)?;
    w.write_u32::<BigEndian>(data.width() as u32).map_err(io)?;
    let bytes: Vec<u8> = data
        .images()
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes).map_err(io)?;
    w.flush().map_err(io)
}
