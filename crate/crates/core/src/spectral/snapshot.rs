//! Binary field snapshots.
//!
//! Layout (little endian): `b"BSSF"`, `u32` version, `u32` dimension,
//! `u64` points per axis, `f64` box length per axis, `u8` representation
//! (0 physical, 1 frequency), then `(re, im)` pairs of `f64` in storage order.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::{Representation, SpectralField};
use super::grid::GridSpec;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BSSF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &n in grid.shape() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for &l in grid.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    let flag: u8 = match field.representation() {
        Representation::Physical => 0,
        Representation::Frequency => 1,
    };
    w.write_all(&[flag])?;
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    if !(1..=3).contains(&d) {
        return Err(Error::Snapshot(format!("dimension {d}")));
    }
    let mut shape = Vec::with_capacity(d);
    for _ in 0..d {
        shape.push(read_u64(&mut r)? as usize);
    }
    let mut lengths = Vec::with_capacity(d);
    for _ in 0..d {
        lengths.push(f64::from_bits(read_u64(&mut r)?));
    }
    let grid = GridSpec::new(shape, lengths).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let repr = match flag[0] {
        0 => Representation::Physical,
        1 => Representation::Frequency,
        f => return Err(Error::Snapshot(format!("representation flag {f}"))),
    };
    let mut bytes = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_values(grid, values, repr)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits() {
        let g = GridSpec::new(vec![4, 8], vec![2.5, 7.0]).unwrap();
        let f = SpectralField::from_fn(&g, |x| Complex64::new(x[0].exp(), -x[1] / 3.0)).into_frequency();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 16 + 16 + 1 + 16 * 32);
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = read_snapshot(&b"XXXX\x01\0\0\0"[..]).unwrap_err();
        assert!(matches!(err, Error::Snapshot(_)));
    }
}
