//! `NCMX` binary matrix format.
//!
//! Layout: magic `NCMX`, version `u32 = 1`, rows `u64`, cols `u64`, then
//! `rows * cols` complex entries as little-endian `f64` pairs (re, im),
//! row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::matrix::ComplexMatrix;

pub const MAGIC: &[u8; 4] = b"NCMX";
pub const VERSION: u32 = 1;

pub fn write_ncmx<W: Write>(mut w: W, m: &ComplexMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for z in m.as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated data".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_ncmx<R: Read>(mut r: R) -> Result<ComplexMatrix> {
    let magic: [u8; 4] = read_array(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let cols = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let count = rows
        .checked_mul(cols)
        .filter(|&c| c <= (1 << 28))
        .ok_or_else(|| Error::Format(format!("unreasonable shape {rows}x{cols}")))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_array(&mut r)?);
        let im = f64::from_le_bytes(read_array(&mut r)?);
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Format("non-finite entry".into()));
        }
        data.push(Complex64::new(re, im));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after matrix data".into()));
    }
    ComplexMatrix::from_vec(rows, cols, data)
}

pub fn save_ncmx(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    write_ncmx(BufWriter::new(File::create(path)?), m)
}

pub fn load_ncmx(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    read_ncmx(BufReader::new(File::open(path)?))
}
