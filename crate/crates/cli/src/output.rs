use std::io::Write;

use crate::CliError;

/// An in-memory CSV table, written once at the end by a single writer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Comment line, then header and rows.
    pub fn write<W: Write>(&self, w: &mut W, comment: &str) -> Result<(), CliError> {
        writeln!(w, "{comment}")?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for r in &self.rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
