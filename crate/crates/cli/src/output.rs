//! CSV datasets with a `#` comment header and footer.

use std::io::Write;

use csv::{Terminator, WriterBuilder};

use crate::CliError;

/// Shortest decimal that round-trips to the same binary64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            header: Vec::new(),
            columns,
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.header.push((key.into(), value.to_string()));
    }

    pub fn summary(&mut self, key: impl Into<String>, value: impl ToString) {
        self.footer.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for (k, v) in &self.header {
            writeln!(out, "# {k}: {v}")?;
        }
        {
            let mut w = WriterBuilder::new()
                .terminator(Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        for (k, v) in &self.footer {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut d = Dataset::new(vec!["a", "b"]);
        d.meta("tool", "ndw");
        d.push(vec![num(0.1), num(1e-20)]);
        d.summary("ok", true);
        let text = String::from_utf8(d.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "# tool: ndw\na,b\n0.1,1e-20\n# ok: true\n");
        assert_eq!(d.footer_value("ok"), Some("true"));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1.04f64.powi(-50), 5e-324, 12.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(12.0), "12.0");
    }
}
