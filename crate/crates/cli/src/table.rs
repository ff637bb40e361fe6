//! CSV tables with a header row and a fixed column order.

use std::path::Path;
use std::str::FromStr;

use crate::error::{io_err, CliError, Result};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Space-separated integers, as in index dumps.
pub fn fmt_levels(v: &[u32]) -> String {
    v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let mut t = Table::new(header);
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            t.rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_csv(&text).map_err(|msg| CliError::Table {
            path: path.display().to_string(),
            msg,
        })
    }

    /// Parsed cell; empty cells read as `None`.
    pub fn get<T: FromStr>(&self, row: usize, name: &str) -> std::result::Result<Option<T>, String> {
        let col = self.column(name).ok_or_else(|| format!("missing column '{name}'"))?;
        let cell = &self.rows[row][col];
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<T>()
            .map(Some)
            .map_err(|_| format!("row {row}: cannot parse '{cell}' in column '{name}'"))
    }

    pub fn require<T: FromStr>(&self, row: usize, name: &str) -> std::result::Result<T, String> {
        self.get(row, name)?
            .ok_or_else(|| format!("row {row}: empty '{name}'"))
    }
}
