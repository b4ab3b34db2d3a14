//! Binary field snapshots.
//!
//! One record is
//!
//! ```text
//! "RCXF"                 4 bytes
//! version                u16 LE (currently 1)
//! dim                    u8
//! sizes                  u32 LE per axis
//! periods                f64 LE per axis
//! coefficients           (re, im) f64 LE pairs, row-major wavenumber order
//! ```
//!
//! Files may hold any number of records back to back.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RCXF";
const VERSION: u16 = 1;

pub fn write_field<W: Write>(w: &mut W, f: &SpectralField) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[g.dim() as u8])?;
    for &n in g.sizes() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for &p in g.periods() {
        w.write_all(&p.to_le_bytes())?;
    }
    for c in f.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_field<R: Read>(r: &mut R) -> Result<Option<SpectralField>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut d = [0u8; 1];
    r.read_exact(&mut d)?;
    let dim = d[0] as usize;
    if !(2..=3).contains(&dim) {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let mut sizes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        sizes.push(u32::from_le_bytes(b) as usize);
    }
    let mut periods = Vec::with_capacity(dim);
    for _ in 0..dim {
        periods.push(read_f64(r)?);
    }
    let grid = Grid::with_periods(&sizes, &periods).map_err(|e| Error::Format(e.to_string()))?;
    let mut coeffs = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        coeffs.push(Complex64::new(re, im));
    }
    SpectralField::from_coeffs(&grid, coeffs).map(Some)
}

pub fn save(path: &Path, fields: &[&SpectralField]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for f in fields {
        write_field(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<SpectralField>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    while let Some(f) = read_field(&mut r)? {
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_in_memory() {
        let g = Grid::with_periods(&[8, 16, 8], &[1.0, 2.0, 3.0]).unwrap();
        let f = SpectralField::from_fn(&g, |x| (x[0] * 6.0).sin() + x[2]);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"RCXF");
        let mut cur = std::io::Cursor::new(buf);
        for _ in 0..2 {
            let back = read_field(&mut cur).unwrap().unwrap();
            assert_eq!(back.grid(), f.grid());
            assert_eq!(back.coeffs(), f.coeffs());
        }
        assert!(read_field(&mut cur).unwrap().is_none());
    }

    #[test]
    fn rejects_garbage() {
        let mut cur = std::io::Cursor::new(b"XXXX0000".to_vec());
        assert!(matches!(read_field(&mut cur), Err(Error::Format(_))));
    }
}
