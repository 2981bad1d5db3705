//! Artifact writers. CSV is the canonical numeric format; floats are written with Rust's
//! shortest round-trip formatting so that reading them back gives the same bits.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Output directory of one run, collecting the names of everything written into it.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    written: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str]) -> io::Result<CsvTable> {
        let path = self.root.join(name);
        let writer = csv::Writer::from_path(&path).map_err(io::Error::other)?;
        self.written.push(name.to_string());
        let mut table = CsvTable { writer, width: header.len() };
        table.writer.write_record(header).map_err(io::Error::other)?;
        Ok(table)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        self.text(name, &(text + "\n"))
    }

    pub fn text(&mut self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.root.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

pub struct CsvTable {
    writer: csv::Writer<fs::File>,
    width: usize,
}

impl CsvTable {
    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        debug_assert_eq!(values.len(), self.width);
        self.writer.write_record(values.iter().map(|v| fmt_f64(*v))).map_err(io::Error::other)
    }

    /// A row with preformatted (possibly non-numeric) fields.
    pub fn record(&mut self, fields: &[String]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.width);
        self.writer.write_record(fields).map_err(io::Error::other)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() && v != 0.0 && (v.abs() < 1e-5 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
