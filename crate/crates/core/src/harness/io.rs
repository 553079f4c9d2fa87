//! SWE1 state dumps and PGM field images.
//!
//! SWE1 layout: the bytes `SWE1`, `nlon` and `nlat` as little-endian `u32`,
//! then `3 * nlon * nlat` little-endian `f64` in u, v, h block order.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Field, Result, StateVector};

pub const SWE1_MAGIC: &[u8; 4] = b"SWE1";

pub fn encode_state(x: &StateVector) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 8 * x.len());
    buf.extend_from_slice(SWE1_MAGIC);
    buf.extend_from_slice(&(x.nlon() as u32).to_le_bytes());
    buf.extend_from_slice(&(x.nlat() as u32).to_le_bytes());
    for v in x.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_state(bytes: &[u8]) -> Result<StateVector> {
    if bytes.len() < 12 {
        return Err(Error::Format(format!("SWE1 header needs 12 bytes, got {}", bytes.len())));
    }
    if &bytes[..4] != SWE1_MAGIC {
        return Err(Error::Format("missing SWE1 magic".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (nlon, nlat) = (word(4), word(8));
    let n = nlon
        .checked_mul(nlat)
        .and_then(|c| c.checked_mul(3))
        .ok_or_else(|| Error::Format(format!("implausible dimensions {nlon}x{nlat}")))?;
    let body = &bytes[12..];
    if body.len() != 8 * n {
        return Err(Error::Format(format!("{nlon}x{nlat} state needs {} data bytes, file has {}", 8 * n, body.len())));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    StateVector::from_vec(nlon, nlat, data)
}

pub fn dump_state(x: &StateVector, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_state(x))?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<StateVector> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_state(&bytes)
}

/// Binary PGM of one field, north at the top, min mapped to 0 and max to 255.
/// A constant field maps to 0.
pub fn encode_pgm(x: &StateVector, field: Field) -> Vec<u8> {
    let (nlon, nlat) = (x.nlon(), x.nlat());
    let values = x.field(field);
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut buf = format!("P5\n# field={field} min={lo:e} max={hi:e}\n{nlon} {nlat}\n255\n").into_bytes();
    let range = hi - lo;
    for j in (0..nlat).rev() {
        for i in 0..nlon {
            let v = values[i + j * nlon];
            let px = if range > 0.0 { ((v - lo) / range * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 };
            buf.push(px);
        }
    }
    buf
}

pub fn export_field_image(x: &StateVector, field: Field, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(x, field))?;
    Ok(())
}
