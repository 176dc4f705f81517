//! CSV and JSON writers. Numbers use `.` decimals and Rust's shortest
//! round-trip exponent form, so identical results give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::LabError;

/// `1.25e-3`, `nan`, `inf`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Empty cell for missing values.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Collects the files written by one run.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, LabError> {
        fs::create_dir_all(dir).map_err(|e| LabError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), LabError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// Long-format plot data: one `(x, y, series)` row per point.
    pub fn plot<I>(&mut self, name: &str, points: I) -> Result<(), LabError>
    where
        I: IntoIterator<Item = (f64, f64, String)>,
    {
        self.csv(
            name,
            &["x", "y", "series"],
            points.into_iter().map(|(x, y, s)| vec![num(x), num(y), s]),
        )
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), LabError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}
