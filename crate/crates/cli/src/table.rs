//! CSV output shared by the computing subcommands.
//!
//! Everything printed goes through here, so stdout and the `--out` copy are
//! the same bytes.

use std::io::Write;
use std::path::Path;

use toruswalk::geometry::LatticePoint;
use toruswalk::verify::fmt_num;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::io)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::io)?;
        }
        w.into_inner().map_err(|e| CliError::io(e.into_error()))
    }

    /// Print to stdout, and into `dir/name.csv` when a directory is given.
    pub fn emit(&self, dir: Option<&Path>, name: &str) -> Result<(), CliError> {
        let bytes = self.to_bytes()?;
        std::io::stdout().write_all(&bytes).map_err(CliError::io)?;
        if let Some(dir) = dir {
            std::fs::create_dir_all(dir).map_err(CliError::io)?;
            std::fs::write(dir.join(format!("{name}.csv")), &bytes).map_err(CliError::io)?;
        }
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    fmt_num(v)
}

pub fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn opt_int(v: Option<i64>) -> String {
    v.map(|k| k.to_string()).unwrap_or_default()
}

/// Two cells for a point, empty when absent.
pub fn point(p: Option<LatticePoint>) -> [String; 2] {
    match p {
        Some(p) => [p.x1.to_string(), p.x2.to_string()],
        None => [String::new(), String::new()],
    }
}
