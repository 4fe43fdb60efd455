//! Binary field snapshots.
//!
//! Layout, all little-endian: `b"KHOW"`, `u32` version, `u32 nq`, `u32 np`,
//! `f64 q_min, q_max, p_min, p_max`, then `nq·np` `f64` values with `q` as
//! the outer index.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, FieldKind, PhaseSpaceGrid};
use crate::error::{KhoError, Result};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"KHOW";
pub const SNAPSHOT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn into_field(self, kind: FieldKind) -> Result<Field> {
        Field::from_values(self.grid, self.values, kind)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(g.nq() as u32).to_le_bytes());
        out.extend_from_slice(&(g.np() as u32).to_le_bytes());
        for x in [g.q_min(), g.q_max(), g.p_min(), g.p_max()] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("truncated header ({} bytes)", bytes.len()));
        }
        if bytes[0..4] != SNAPSHOT_MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let nq = u32_at(8) as usize;
        let np = u32_at(12) as usize;
        let (q_min, q_max, p_min, p_max) = (f64_at(16), f64_at(24), f64_at(32), f64_at(40));
        if q_min != -q_max || p_min != -p_max {
            return Err("domain is not symmetric about the origin".into());
        }
        let grid = PhaseSpaceGrid::new(nq, np, q_max, p_max).map_err(|e| e.to_string())?;
        let expected = HEADER_LEN + 8 * nq * np;
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes, found {}", bytes.len()));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { grid, values })
    }
}

impl From<&Field> for Snapshot {
    fn from(f: &Field) -> Self {
        Self {
            grid: *f.grid(),
            values: f.values().to_vec(),
        }
    }
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| KhoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&Snapshot::from(field).to_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| KhoError::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| KhoError::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| KhoError::io(path, e))?;
    Snapshot::from_bytes(&bytes).map_err(|reason| KhoError::Snapshot {
        path: path.to_path_buf(),
        reason,
    })
}
