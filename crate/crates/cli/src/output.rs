//! Result tables, CSV serialization, and the run manifest.
//!
//! Numeric cells are rendered with Rust's shortest-roundtrip float
//! formatting, so equal runs produce byte-identical CSV files. CSVs are
//! written RFC 4180 style (CRLF record terminators, quoting only where
//! needed).

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::scenario::Scenario;

/// A rectangular result table with named columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultTable {
    /// Column names, in output order.
    pub headers: Vec<String>,
    /// Rows of pre-rendered cells; every row has `headers.len()` cells.
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    /// Creates an empty table with the given column names.
    #[must_use]
    pub fn new(headers: &[&str]) -> Self {
        ResultTable {
            headers: headers.iter().map(|h| (*h).to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    ///
    /// Panics if the cell count does not match the header count — a
    /// programming error, not an input error.
    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.headers.len(),
            "row width must match header width"
        );
        self.rows.push(cells);
    }

    /// Number of data rows.
    #[must_use]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// True when the table holds no data rows.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the table as an RFC 4180 CSV file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        writer
            .write_record(&self.headers)
            .context("cannot write CSV header")?;
        for row in &self.rows {
            writer
                .write_record(row)
                .with_context(|| format!("cannot write CSV row in {}", path.display()))?;
        }
        writer
            .flush()
            .with_context(|| format!("cannot flush {}", path.display()))?;
        Ok(())
    }
}

/// Shortest-roundtrip rendering for a float cell.
#[must_use]
pub fn cell(v: f64) -> String {
    format!("{v}")
}

/// Rendering for an integer cell.
#[must_use]
pub fn cell_usize(v: usize) -> String {
    format!("{v}")
}

/// Rendering for a boolean cell.
#[must_use]
pub fn cell_bool(v: bool) -> String {
    format!("{v}")
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    /// Tool version that produced the outputs.
    pub version: &'static str,
    /// Mode that actually ran (after subcommand overrides).
    pub mode: &'static str,
    /// Resolved scenario (after command-line overrides).
    pub scenario: &'a Scenario,
    /// Output CSV files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Rows written per output file, same order as `outputs`.
    pub rows: Vec<usize>,
    /// Samples skipped because their geometry could not be evaluated
    /// (corner diffraction, rank deficiency, shadow boundaries).
    pub excluded_samples: usize,
    /// Wall-clock runtime in seconds (informational; not reproducible).
    pub wall_seconds: f64,
}

/// Writes the manifest and the tables into `out_dir`, creating it if
/// needed. Returns the manifest path.
pub fn write_outputs(
    out_dir: &Path,
    manifest: &Manifest,
    tables: &[(&str, &ResultTable)],
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    for (name, table) in tables {
        table.write_csv(&out_dir.join(name))?;
    }
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest).context("cannot serialize manifest")?;
    std::fs::write(&manifest_path, json + "\n")
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    Ok(manifest_path)
}
