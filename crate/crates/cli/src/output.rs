//! Deterministic CSV/JSON emission with atomic replacement of the target.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Round-trip exact formatting: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).with_context(|| format!("replacing {}", target.display()))?;
    log::info!("wrote {}", target.display());
    Ok(target)
}

/// A CSV table whose cells are already formatted.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("flushing CSV: {e}"))
    }
}

pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Output directory plus the configured file-name prefix.
pub struct Sink {
    pub dir: PathBuf,
    pub prefix: String,
    pub summary_json: bool,
}

impl Sink {
    pub fn csv(&self, stem: &str, table: &Table) -> Result<PathBuf> {
        write_atomic(&self.dir, &format!("{}{stem}.csv", self.prefix), &table.to_bytes()?)
    }

    pub fn summary(&self, stem: &str, value: &impl Serialize) -> Result<Option<PathBuf>> {
        if !self.summary_json {
            return Ok(None);
        }
        write_atomic(&self.dir, &format!("{}{stem}.json", self.prefix), &json_bytes(value)?).map(Some)
    }
}
