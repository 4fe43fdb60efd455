//! Flat-file writers. Numbers go out as `{:.16e}`: 17 significant digits,
//! '.' decimal point, exact round trip for binary64.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{KhoError, Result};

pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| KhoError::io(dir, e))
}

/// Writes a header line followed by the rows, comma separated.
pub(crate) fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("record serializes");
    write_bytes(path, text.as_bytes())
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| KhoError::io(path, e))?;
    file.write_all(bytes).map_err(|e| KhoError::io(path, e))
}
