//! Header-validated CSV reading with per-row diagnostics.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvDiagnostic {
    /// 1-based file line; 1 is the header.
    pub line: u64,
    pub column: Option<String>,
    pub message: String,
}

impl fmt::Display for CsvDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "line {}, column {c}: {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// Parsed CSV body with the header checked by the caller.
pub(crate) struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(u64, csv::StringRecord)>,
}

pub(crate) fn read_table(source: impl Read) -> Result<Table, PipelineError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header = match reader.headers() {
        Ok(h) => h.iter().map(str::to_string).collect::<Vec<_>>(),
        Err(e) => return Err(PipelineError::Schema(vec![diag(1, None, e.to_string())])),
    };
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for rec in reader.records() {
        match rec {
            Ok(r) => {
                let line = r.position().map(|p| p.line()).unwrap_or(0);
                if r.iter().all(|f| f.is_empty()) {
                    continue;
                }
                rows.push((line, r));
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                diags.push(diag(line, None, e.to_string()));
            }
        }
    }
    if !diags.is_empty() {
        return Err(PipelineError::Schema(diags));
    }
    Ok(Table { header, rows })
}

pub(crate) fn diag(line: u64, column: Option<&str>, message: impl Into<String>) -> CsvDiagnostic {
    CsvDiagnostic {
        line,
        column: column.map(str::to_string),
        message: message.into(),
    }
}

/// Checks that `header` equals `expected` exactly.
pub(crate) fn expect_header(header: &[String], expected: &[&str]) -> Result<(), PipelineError> {
    if header.iter().map(String::as_str).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(PipelineError::Schema(vec![diag(
            1,
            None,
            format!("expected header '{}', found '{}'", expected.join(","), header.join(",")),
        )]))
    }
}

/// Field accessor that records a diagnostic instead of failing fast.
pub(crate) struct RowReader<'a> {
    pub line: u64,
    pub record: &'a csv::StringRecord,
    pub header: &'a [String],
    pub diags: &'a mut Vec<CsvDiagnostic>,
}

impl RowReader<'_> {
    fn index(&self, col: &str) -> Option<usize> {
        self.header.iter().position(|h| h == col)
    }

    pub fn text(&mut self, col: &str) -> Option<String> {
        let v = self.index(col).and_then(|i| self.record.get(i)).unwrap_or("");
        if v.is_empty() {
            self.diags.push(diag(self.line, Some(col), "missing value"));
            None
        } else {
            Some(v.to_string())
        }
    }

    pub fn optional_number(&mut self, col: &str, min: f64, max: f64) -> Option<Option<f64>> {
        let v = self.index(col).and_then(|i| self.record.get(i)).unwrap_or("");
        if v.is_empty() {
            return Some(None);
        }
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && (min..=max).contains(&x) => Some(Some(x)),
            Ok(x) => {
                self.diags
                    .push(diag(self.line, Some(col), format!("{x} outside [{min}, {max}]")));
                None
            }
            Err(_) => {
                self.diags.push(diag(self.line, Some(col), format!("'{v}' is not a number")));
                None
            }
        }
    }

    pub fn number(&mut self, col: &str, min: f64, max: f64) -> Option<f64> {
        match self.optional_number(col, min, max) {
            Some(Some(x)) => Some(x),
            Some(None) => {
                self.diags.push(diag(self.line, Some(col), "missing value"));
                None
            }
            None => None,
        }
    }

    pub fn integer(&mut self, col: &str, min: u32, max: u32) -> Option<u32> {
        let v = self.text(col)?;
        match v.parse::<u32>() {
            Ok(x) if (min..=max).contains(&x) => Some(x),
            Ok(x) => {
                self.diags
                    .push(diag(self.line, Some(col), format!("{x} outside [{min}, {max}]")));
                None
            }
            Err(_) => {
                self.diags
                    .push(diag(self.line, Some(col), format!("'{v}' is not a non-negative integer")));
                None
            }
        }
    }

    pub fn fail(&mut self, col: Option<&str>, message: impl Into<String>) {
        self.diags.push(diag(self.line, col, message));
    }
}
