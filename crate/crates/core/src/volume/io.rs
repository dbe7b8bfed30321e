//! `PASVOL 1` volume files: one ASCII header line, then little-endian `f32`
//! samples in x-fastest order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::ScalarVolume;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const PASVOL_MAGIC: &str = "PASVOL";
const VERSION: &str = "1";

pub fn write_pasvol<T: Real>(vol: &ScalarVolume<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(vol, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_pasvol<T: Real>(path: impl AsRef<Path>) -> Result<ScalarVolume<T>> {
    read_from(&mut BufReader::new(File::open(path)?))
}

pub fn write_to<T: Real>(vol: &ScalarVolume<T>, w: &mut impl Write) -> Result<()> {
    let [nx, ny, nz] = vol.dims();
    let o = vol.origin();
    writeln!(
        w,
        "{PASVOL_MAGIC} {VERSION} {nx} {ny} {nz} {} {} {} {}",
        vol.spacing().as_f64(),
        o[0].as_f64(),
        o[1].as_f64(),
        o[2].as_f64()
    )?;
    let mut bytes = Vec::with_capacity(vol.values().len() * 4);
    for v in vol.values() {
        bytes.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_from<T: Real>(r: &mut impl BufRead) -> Result<ScalarVolume<T>> {
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header)?;
    let header =
        std::str::from_utf8(&header).map_err(|_| Error::Format("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&PASVOL_MAGIC) {
        return Err(Error::Format(format!("bad magic, expected {PASVOL_MAGIC}")));
    }
    if fields.get(1) != Some(&VERSION) {
        return Err(Error::Format(format!(
            "unsupported version {:?}",
            fields.get(1)
        )));
    }
    if fields.len() != 9 {
        return Err(Error::Format(format!(
            "header has {} fields, expected 9",
            fields.len()
        )));
    }
    let dim = |i: usize| -> Result<usize> {
        fields[i]
            .parse()
            .map_err(|_| Error::Format(format!("bad dimension {:?}", fields[i])))
    };
    let real = |i: usize| -> Result<f64> {
        fields[i]
            .parse()
            .map_err(|_| Error::Format(format!("bad number {:?}", fields[i])))
    };
    let dims = [dim(2)?, dim(3)?, dim(4)?];
    let spacing = real(5)?;
    let origin = [real(6)?, real(7)?, real(8)?];
    let n = dims
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut bytes = vec![
        0u8;
        n.checked_mul(4)
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?
    ];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Format(format!("expected {n} samples, file is short")))?;
    let values = bytes
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    ScalarVolume::new(dims, T::lit(spacing), origin.map(T::lit), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    #[test]
    fn roundtrip() {
        let grid = Grid::<f64>::centered([3, 4, 5], 0.25).unwrap();
        let vol = ScalarVolume::from_fn(grid, 1.0, |p| if p[0] < 0.0 { 0.0 } else { 1.0 }).unwrap();
        let mut buf = Vec::new();
        write_to(&vol, &mut buf).unwrap();
        assert!(buf.starts_with(b"PASVOL 1 3 4 5 0.25 -0.25 -0.375 -0.5\n"));
        let back: ScalarVolume<f64> = read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.values(), vol.values());
        assert_eq!(back.origin(), vol.origin());
    }

    #[test]
    fn rejects_other_magic() {
        let data = b"VOLUME 1 1 1 1 1 0 0 0\n\0\0\0\0";
        assert!(matches!(
            read_from::<f64>(&mut &data[..]),
            Err(Error::Format(_))
        ));
        let data = b"PASVOL 2 1 1 1 1 0 0 0\n\0\0\0\0";
        assert!(matches!(
            read_from::<f64>(&mut &data[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn rejects_short_payload() {
        let data = b"PASVOL 1 2 1 1 1 0 0 0\n\0\0\0\0";
        assert!(matches!(
            read_from::<f64>(&mut &data[..]),
            Err(Error::Format(_))
        ));
    }
}
