//! Bit-exact field files and PGM snapshots.
//!
//! Layout: the 8-byte magic `MBOFLD01`, one UTF-8 JSON header line
//! `{"dim":..,"cells_per_axis":..,"extent":..,"dtype":"f64"|"u8"}`
//! terminated by `\n`, then the raw little-endian row-major payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridSpec, PhaseField, ScalarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MBOFLD01";

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Phase(PhaseField),
}

impl FieldData {
    pub fn grid(&self) -> &GridSpec {
        match self {
            FieldData::Scalar(f) => f.grid(),
            FieldData::Phase(p) => p.grid(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            FieldData::Scalar(f) => Ok(f),
            FieldData::Phase(_) => Err(Error::Header("expected dtype f64, found u8".into())),
        }
    }

    pub fn into_phase(self) -> Result<PhaseField> {
        match self {
            FieldData::Phase(p) => Ok(p),
            FieldData::Scalar(_) => Err(Error::Header("expected dtype u8, found f64".into())),
        }
    }
}

impl From<ScalarField> for FieldData {
    fn from(f: ScalarField) -> Self {
        FieldData::Scalar(f)
    }
}

impl From<PhaseField> for FieldData {
    fn from(p: PhaseField) -> Self {
        FieldData::Phase(p)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    cells_per_axis: usize,
    extent: f64,
    dtype: String,
}

pub fn encode(field: &FieldData) -> Vec<u8> {
    let g = field.grid();
    let (dtype, payload): (&str, Vec<u8>) = match field {
        FieldData::Scalar(f) => ("f64", f.values().iter().flat_map(|v| v.to_le_bytes()).collect()),
        FieldData::Phase(p) => ("u8", p.bits().to_vec()),
    };
    let header = Header {
        dim: g.dim(),
        cells_per_axis: g.cells_per_axis(),
        extent: g.extent(),
        dtype: dtype.into(),
    };
    let mut out = MAGIC.to_vec();
    out.extend(serde_json::to_vec(&header).expect("header serializes"));
    out.push(b'\n');
    out.extend(payload);
    out
}

pub fn decode(bytes: &[u8]) -> Result<FieldData> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Header("bad magic".into()));
    }
    let rest = &bytes[MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Header("unterminated header line".into()))?;
    let header: Header = serde_json::from_slice(&rest[..nl])
        .map_err(|e| Error::Header(format!("malformed header: {e}")))?;
    let grid = GridSpec::new(header.dim, header.cells_per_axis, header.extent)
        .map_err(|e| Error::Header(e.to_string()))?;
    let payload = &rest[nl + 1..];
    match header.dtype.as_str() {
        "f64" => {
            let expected = grid.len() * 8;
            if payload.len() != expected {
                return Err(Error::SizeMismatch {
                    expected,
                    actual: payload.len(),
                });
            }
            let values = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Ok(FieldData::Scalar(ScalarField::new(grid, values)?))
        }
        "u8" => {
            if payload.len() != grid.len() {
                return Err(Error::SizeMismatch {
                    expected: grid.len(),
                    actual: payload.len(),
                });
            }
            Ok(FieldData::Phase(PhaseField::new(grid, payload.to_vec())?))
        }
        other => Err(Error::Header(format!("unknown dtype {other:?}"))),
    }
}

pub fn write_field(path: impl AsRef<Path>, field: &FieldData) -> Result<()> {
    fs::write(path, encode(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldData> {
    decode(&fs::read(path)?)
}

/// Binary PGM (P5) image of a 2D phase: set cells black, row 0 at the top
/// holding the largest axis-1 coordinate.
pub fn write_pgm(path: impl AsRef<Path>, phase: &PhaseField) -> Result<()> {
    let g = phase.grid();
    if g.dim() != 2 {
        return Err(Error::Precondition("PGM export needs a 2D phase".into()));
    }
    let n = g.cells_per_axis();
    let mut out = Vec::with_capacity(n * n + 32);
    write!(out, "P5\n{n} {n}\n255\n")?;
    for row in 0..n {
        let j = n - 1 - row;
        for i in 0..n {
            out.push(if phase.get(g.ravel([i, j, 0])) { 0 } else { 255 });
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let g = GridSpec::new(3, 16, 0.7).unwrap();
        let f = ScalarField::from_fn(g, |p| (p[0] * 13.1).sin() * 1e-300 + p[1] / 3.0).unwrap();
        let back = decode(&encode(&f.clone().into())).unwrap().into_scalar().unwrap();
        assert!(f
            .values()
            .iter()
            .zip(back.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.grid(), f.grid());
    }

    #[test]
    fn phase_round_trip_through_a_file() {
        let g = GridSpec::square(32).unwrap();
        let p = PhaseField::from_predicate(g, |x| x[0] < x[1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.fld");
        write_field(&path, &p.clone().into()).unwrap();
        assert_eq!(read_field(&path).unwrap().into_phase().unwrap(), p);
    }

    #[test]
    fn truncated_payload_is_a_size_mismatch() {
        let g = GridSpec::square(16).unwrap();
        let mut bytes = encode(&ScalarField::constant(g, 1.0).unwrap().into());
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode(&bytes), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn wrong_dim_is_a_header_error() {
        let mut bytes = MAGIC.to_vec();
        bytes.extend(br#"{"dim":4,"cells_per_axis":16,"extent":1.0,"dtype":"f64"}"#);
        bytes.push(b'\n');
        assert!(matches!(decode(&bytes), Err(Error::Header(_))));
        assert!(matches!(decode(b"NOTMAGIC{}\n"), Err(Error::Header(_))));
    }

    #[test]
    fn pgm_has_expected_size() {
        let g = GridSpec::square(16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, &PhaseField::full(g)).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n16 16\n255\n"));
        assert_eq!(bytes.len(), 13 + 256);
    }
}
