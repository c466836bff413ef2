//! `VVL1` binary field snapshots.
//!
//! Layout: the magic `VVL1`, `n` as a little-endian `u64`, one kind tag byte,
//! then `n²` little-endian `f64` grid values in row-major order (`x` fastest).

use std::io::{self, Read, Write};
use std::path::Path;

use vvl_core::{GridSpec, SpectralField};

pub const MAGIC: &[u8; 4] = b"VVL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FieldKind {
    Vorticity = 0,
    VelocityX = 1,
    VelocityY = 2,
    Forcing = 3,
    Scalar = 4,
}

impl FieldKind {
    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => FieldKind::Vorticity,
            1 => FieldKind::VelocityX,
            2 => FieldKind::VelocityY,
            3 => FieldKind::Forcing,
            4 => FieldKind::Scalar,
            _ => return None,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a VVL1 snapshot")]
    BadMagic,
    #[error("unknown field kind tag {0}")]
    BadKind(u8),
    #[error("invalid grid size {0}")]
    BadSize(u64),
}

pub fn write_field(mut w: impl Write, kind: FieldKind, field: &SpectralField) -> io::Result<()> {
    let n = field.grid().n() as u64;
    let mut buf = Vec::with_capacity(13 + 8 * field.grid().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.push(kind as u8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_field(mut r: impl Read) -> Result<(FieldKind, SpectralField), SnapshotError> {
    let mut header = [0u8; 13];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let n = u64::from_le_bytes(header[4..12].try_into().expect("8 bytes"));
    let kind = FieldKind::from_tag(header[12]).ok_or(SnapshotError::BadKind(header[12]))?;
    let grid = usize::try_from(n)
        .ok()
        .and_then(|n| GridSpec::new(n).ok())
        .ok_or(SnapshotError::BadSize(n))?;
    let mut payload = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut payload)?;
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((kind, SpectralField::from_values(grid, values)))
}

pub fn save(path: &Path, kind: FieldKind, field: &SpectralField) -> io::Result<()> {
    write_field(io::BufWriter::new(std::fs::File::create(path)?), kind, field)
}

pub fn load(path: &Path) -> Result<(FieldKind, SpectralField), SnapshotError> {
    read_field(io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = GridSpec::new(16).unwrap();
        let f = SpectralField::from_fn(grid, |x, y| (x + 2.0 * y).sin() / 3.0);
        let mut bytes = Vec::new();
        write_field(&mut bytes, FieldKind::VelocityY, &f).unwrap();
        assert_eq!(bytes.len(), 13 + 8 * 256);
        assert_eq!(&bytes[..4], b"VVL1");
        assert_eq!(bytes[12], 2);
        let (kind, g) = read_field(bytes.as_slice()).unwrap();
        assert_eq!(kind, FieldKind::VelocityY);
        let same = f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let grid = GridSpec::new(8).unwrap();
        let mut bytes = Vec::new();
        write_field(&mut bytes, FieldKind::Scalar, &SpectralField::zeros(grid)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_field(bad.as_slice()), Err(SnapshotError::BadMagic)));
        let mut bad = bytes.clone();
        bad[12] = 9;
        assert!(matches!(read_field(bad.as_slice()), Err(SnapshotError::BadKind(9))));
        let mut bad = bytes.clone();
        bad[4] = 7;
        assert!(matches!(read_field(bad.as_slice()), Err(SnapshotError::BadSize(7))));
        assert!(matches!(read_field(&bytes[..100]), Err(SnapshotError::Io(_))));
    }
}
