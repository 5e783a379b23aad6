//! `TNSR v1` binary tensor files.
//!
//! Layout: magic `TNSR`, `u32` order N, N × `u32` dims, then `f64` values in
//! row-major order. Every integer and float is little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TNSR";

pub fn write_tnsr<W: Write>(mut w: W, t: &Tensor<f64>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.dims() {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.len() * 8);
    for &x in t.values() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tnsr<R: Read>(mut r: R) -> Result<Tensor<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected TNSR".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| Error::Format("truncated header".into()))?;
    let order = u32::from_le_bytes(word) as usize;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        r.read_exact(&mut word).map_err(|_| Error::Format("truncated dims".into()))?;
        dims.push(u32::from_le_bytes(word) as usize);
    }
    let n: usize = dims.iter().product();
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != n * 8 {
        return Err(Error::Format(format!("expected {} value bytes, found {}", n * 8, raw.len())));
    }
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Tensor::new(dims, values)
}

pub fn save(path: impl AsRef<Path>, t: &Tensor<f64>) -> Result<()> {
    let mut buf = Vec::new();
    write_tnsr(&mut buf, t)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Tensor<f64>> {
    read_tnsr(fs::File::open(path)?)
}
