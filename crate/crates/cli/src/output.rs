//! Deterministic output rendering: schema-versioned CSV with fixed float
//! formatting and JSON with declaration-order keys.

use std::io::Write;
use std::path::Path;

/// First line of every CSV this tool emits.
pub const CSV_SCHEMA: &str = "# lockdown-opt schema v1";

/// Fixed 12-significant-digit rendering so identical runs are
/// byte-identical.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Write CSV content (already including the header row) behind the schema
/// comment line, with LF endings.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_SCHEMA}")?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()
}

/// Pretty JSON with a trailing newline; key order follows the struct
/// declaration, so identical values render identically.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}
