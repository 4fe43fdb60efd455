use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::output::{write_bytes, write_json};
use crate::error::{KhoError, Result};
use crate::grid::{read_snapshot, Snapshot};

/// Sidecar facts about an emitted image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPlotInfo {
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
    pub min: f64,
    pub max: f64,
    /// Fraction of grid nodes with a negative value.
    pub negativity_fraction: f64,
    /// Among the brightest tenth of the visible pixels, the fraction with
    /// the less common sign.
    pub fringe_fraction: f64,
    pub image: PathBuf,
    /// Positive and negative parts, written only when the field goes negative.
    pub signed_channel: Option<(PathBuf, PathBuf)>,
}

/// Pixels below this fraction of the peak count as background for the
/// fringe statistic.
const VISIBLE_FLOOR: f64 = 1e-3;

/// Renders `|values|` of a snapshot as a 16-bit PGM, with `p` increasing
/// upwards and `q` to the right, and writes a JSON sidecar next to it.
pub fn emit_density_plot(snapshot: impl AsRef<Path>, out: impl AsRef<Path>, gamma: f64) -> Result<DensityPlotInfo> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(KhoError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let snap = read_snapshot(snapshot)?;
    render(&snap, out.as_ref(), gamma)
}

fn render(snap: &Snapshot, out: &Path, gamma: f64) -> Result<DensityPlotInfo> {
    let (nq, np) = (snap.grid.nq(), snap.grid.np());
    let v = &snap.values;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    write_pgm(out, nq, np, |iq, ip| v[iq * np + ip].abs(), peak, gamma)?;
    let signed_channel = if min < 0.0 {
        let stem = out.with_extension("");
        let pos = stem.with_file_name(format!("{}_pos.pgm", file_stem(out)));
        let neg = stem.with_file_name(format!("{}_neg.pgm", file_stem(out)));
        write_pgm(&pos, nq, np, |iq, ip| v[iq * np + ip].max(0.0), peak, gamma)?;
        write_pgm(&neg, nq, np, |iq, ip| (-v[iq * np + ip]).max(0.0), peak, gamma)?;
        Some((pos, neg))
    } else {
        None
    };

    let info = DensityPlotInfo {
        width: nq,
        height: np,
        gamma,
        min,
        max,
        negativity_fraction: v.iter().filter(|&&x| x < 0.0).count() as f64 / v.len() as f64,
        fringe_fraction: fringe_fraction(v),
        image: out.to_path_buf(),
        signed_channel,
    };
    write_json(&out.with_extension("json"), &info)?;
    Ok(info)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_pgm(path: &Path, nq: usize, np: usize, value: impl Fn(usize, usize) -> f64, peak: f64, gamma: f64) -> Result<()> {
    let mut bytes = format!("P5\n{nq} {np}\n65535\n").into_bytes();
    bytes.reserve(2 * nq * np);
    for row in 0..np {
        let ip = np - 1 - row;
        for iq in 0..nq {
            let level = if peak > 0.0 {
                (value(iq, ip) / peak).clamp(0.0, 1.0).powf(gamma) * 65535.0
            } else {
                0.0
            };
            bytes.extend_from_slice(&(level.round() as u16).to_be_bytes());
        }
    }
    write_bytes(path, &bytes)
}

/// Share of the top-decile pixels (by magnitude, among visible ones) that
/// carry the less common sign. Alternating fringes give about one half, a
/// positive blob gives zero.
fn fringe_fraction(v: &[f64]) -> f64 {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let mut visible: Vec<f64> = v.iter().map(|x| x.abs()).filter(|&a| a > VISIBLE_FLOOR * peak).collect();
    visible.sort_by(f64::total_cmp);
    let cut = visible[(visible.len() * 9) / 10];
    let band: Vec<f64> = v.iter().copied().filter(|x| x.abs() >= cut).collect();
    let negative = band.iter().filter(|&&x| x < 0.0).count();
    negative.min(band.len() - negative) as f64 / band.len() as f64
}

/// Parses a binary 16-bit PGM written by this module.
pub fn read_pgm16(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| KhoError::io(path, e))?;
    let bad = |reason: &str| KhoError::Snapshot {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(bad("not a 16-bit binary PGM"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() != 2 * w * h {
        return Err(bad("pixel data length mismatch"));
    }
    Ok((w, h, data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}
