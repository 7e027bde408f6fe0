//! Rectangular numeric result tables with deterministic CSV and JSON
//! serialization.
//!
//! The CSV body (header plus data rows) is byte-identical across runs of the
//! same scenario; metadata rides in `#`-prefixed comment lines, of which only
//! the timestamp varies. Files are written to a temporary sibling and renamed
//! into place so a failed run never leaves a partial output.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Ordered key/value metadata; `timestamp_unix` is excluded from the
    /// determinism contract.
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Internal(format!(
                "table `{}` expects {} columns, row has {}",
                self.name,
                self.columns.len(),
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Internal(format!(
                "table `{}` rejects non-finite value {bad}",
                self.name
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn add_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn stamp(&mut self) {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.add_metadata("timestamp_unix", now.to_string());
    }

    /// CSV body only: header line plus data rows, no metadata.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                // shortest round-trip representation keeps runs byte-identical
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.csv_body());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("json serialization failed: {e}")))
    }
}

/// Writes `contents` atomically: a temporary file in the destination
/// directory is renamed over the target only after a full successful write.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let stem = path
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    let tmp = dir.join(format!(".{stem}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

/// FNV-1a hash of the raw scenario bytes, reported in the output metadata so
/// result files can be traced back to their exact configuration.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_nonfinite_rows() {
        let mut t = ResultTable::new("t", &["a", "b"]);
        assert!(t.push_row(vec![1.0]).is_err());
        assert!(t.push_row(vec![1.0, f64::NAN]).is_err());
        assert!(t.push_row(vec![1.0, f64::INFINITY]).is_err());
        assert!(t.push_row(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new("t", &["n", "f"]);
        t.add_metadata("scenario", "demo");
        t.push_row(vec![2.0, 0.5]).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv, "# scenario=demo\nn,f\n2,0.5\n");
    }

    #[test]
    fn float_formatting_round_trips() {
        let mut t = ResultTable::new("t", &["x"]);
        let v = 0.1234567890123456789_f64;
        t.push_row(vec![v]).unwrap();
        let body = t.csv_body();
        let cell = body.lines().nth(1).unwrap();
        assert_eq!(cell.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(content_hash(b"abc"), content_hash(b"abc"));
        assert_ne!(content_hash(b"abc"), content_hash(b"abd"));
    }
}
