//! `DUPT` tensor files: little-endian header and row-major `f32` payload.
//!
//! ```text
//! 0       magic  "DUPT"
//! 4       version u32 = 1
//! 8       rank    u32
//! 12      dims    rank x u32
//! 12+4r   payload prod(dims) x f32
//! ```

use std::fs;
use std::path::Path;

use sodkit_core::tensor::MAX_RANK;
use sodkit_core::Tensor;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DUPT";
pub const VERSION: u32 = 1;

pub fn encode(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * t.rank() + 4 * t.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4-byte slice")))
        .ok_or_else(|| Error::format(offset, format!("truncated {what}")))
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "missing DUPT magic"));
    }
    let version = u32_at(bytes, 4, "version")?;
    if version != VERSION {
        return Err(Error::format(4, format!("version {version}, expected {VERSION}")));
    }
    let rank = u32_at(bytes, 8, "rank")? as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::format(8, format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for i in 0..rank {
        dims.push(u32_at(bytes, 12 + 4 * i, "dims")? as usize);
    }
    let start = 12 + 4 * rank;
    let expected = dims
        .iter()
        .try_fold(4usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format(12, format!("dims {dims:?} overflow")))?;
    let found = bytes.len() - start;
    if found != expected {
        return Err(Error::format(
            start,
            format!("dims {dims:?} need {expected} payload bytes, found {found}"),
        ));
    }
    let data = bytes[start..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
        .collect();
    Ok(Tensor::new(&dims, data)?)
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.in_file(path))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, encode(t)).map_err(|e| Error::io(path, e))
}
