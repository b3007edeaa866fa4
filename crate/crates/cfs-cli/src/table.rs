//! CSV tables with a schema version column and LF line endings.

use std::io::Write;

pub const SCHEMA_VERSION: &str = "1";

/// Header plus rows of already formatted cells. The `schema_version`
/// column is prepended on output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(std::iter::once("schema_version").chain(self.header.iter().map(String::as_str)))?;
        for row in &self.rows {
            w.write_record(std::iter::once(SCHEMA_VERSION).chain(row.iter().map(String::as_str)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation in scientific notation; negative
/// zero is written as `0e0`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == 0.0 {
        "0e0".to_string()
    } else {
        format!("{v:e}")
    }
}
