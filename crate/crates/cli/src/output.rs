//! CSV and JSON emission. Floats use 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// `{:.16e}`, or `NaN` for a missing value.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

/// Accumulates one CSV file in memory.
pub struct Csv {
    body: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { body: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row width");
        writeln!(self.body, "{}", fields.join(",")).unwrap();
    }

    pub fn as_str(&self) -> &str {
        &self.body
    }
}

/// Output directory plus the list of files written so far.
pub struct Sink {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Sink {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        self.write(name, csv.as_str())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}
