use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Twelve significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

impl fmt::Display for CsvTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(f, "{}", r.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_twelve_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_float(2.0)]);
        assert_eq!(t.to_string(), "a,b\n1,2.00000000000e0\n");
    }
}
