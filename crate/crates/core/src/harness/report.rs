use std::path::{Path, PathBuf};

use super::HarnessError;

/// A CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
    }
}

/// Summary and raw samples of one experiment. Runtime is kept out of the
/// CSV output so that files depend on the seed only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub summary: Table,
    pub raw: Table,
    pub label: String,
    pub elapsed_secs: f64,
}

/// Path of the raw-sample file written next to a summary file:
/// `out.csv` → `out.raw.csv`.
pub fn raw_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.raw.csv"))
}

pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, report.summary.to_csv_bytes()?)?;
    std::fs::write(raw_path(path), report.raw.to_csv_bytes()?)?;
    Ok(())
}

/// Shortest round-trip decimal form.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
