//! Shared reader for the bundle's delimited files.
//!
//! Every file starts with `#format: qlca-<kind>/<version>`, followed by a
//! typed header row (`name:type,...`). Later lines starting with `#` are
//! comments, as are blank lines. One record per line; fields are comma
//! separated with standard double-quote escaping.

use crate::error::{LcaError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Text,
    Real,
}

impl ColumnType {
    fn id(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Real => "real",
        }
    }
}

/// Expected layout of one file kind.
pub struct Schema {
    pub kind: &'static str,
    pub file: &'static str,
    pub columns: &'static [(&'static str, ColumnType)],
}

impl Schema {
    pub fn format_line(&self) -> String {
        format!("#format: qlca-{}/{}", self.kind, FORMAT_VERSION)
    }

    pub fn header_line(&self) -> String {
        self.columns
            .iter()
            .map(|(name, ty)| format!("{name}:{}", ty.id()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// One data row with its 1-based line number in the file.
#[derive(Debug, Clone)]
pub struct Row {
    pub line: u64,
    pub fields: Vec<String>,
    file: &'static str,
}

impl Row {
    pub fn text(&self, i: usize) -> &str {
        &self.fields[i]
    }

    /// Nonempty text field.
    pub fn required(&self, i: usize, what: &str) -> Result<&str> {
        let v = self.fields[i].as_str();
        if v.is_empty() {
            return Err(self.error(format!("{what} must not be empty")));
        }
        Ok(v)
    }

    pub fn real(&self, i: usize, what: &str) -> Result<f64> {
        parse_real(&self.fields[i]).ok_or_else(|| self.error(format!("{what} `{}` is not a finite number", self.fields[i])))
    }

    pub fn error(&self, message: impl Into<String>) -> LcaError {
        LcaError::parse(self.file, self.line, message)
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits one line into fields with standard double-quote handling.
fn split_line(line: &[u8]) -> std::result::Result<Vec<String>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(line);
    let mut record = csv::StringRecord::new();
    match reader.read_record(&mut record) {
        Ok(true) => {}
        Ok(false) => return Ok(Vec::new()),
        Err(e) => {
            return Err(match e.kind() {
                csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
                _ => e.to_string(),
            })
        }
    }
    let fields = record.iter().map(|f| f.trim().to_string()).collect();
    match reader.read_record(&mut csv::StringRecord::new()) {
        Ok(false) => Ok(fields),
        _ => Err("line break inside a quoted field".to_string()),
    }
}

/// Reads a whole file against `schema`. Never panics on malformed input.
pub fn read_rows(schema: &Schema, bytes: &[u8]) -> Result<Vec<Row>> {
    let file = schema.file;
    let mut lines = bytes.split(|&b| b == b'\n').enumerate().map(|(i, l)| {
        let l = l.strip_suffix(b"\r").unwrap_or(l);
        (i as u64 + 1, l)
    });
    let expected = schema.format_line();
    let first = lines.next().map(|(_, l)| l).unwrap_or(b"");
    let first = std::str::from_utf8(first).map_err(|_| LcaError::parse(file, 1, "format line is not valid UTF-8"))?;
    if first.trim() != expected {
        let message = if first.starts_with("#format:") {
            format!("unsupported format `{}`, expected `{expected}`", first.trim())
        } else {
            format!("missing format line `{expected}`")
        };
        return Err(LcaError::parse(file, 1, message));
    }

    let mut rows = Vec::new();
    let mut header_seen = false;
    for (line, text) in lines {
        if text.iter().all(u8::is_ascii_whitespace) || text.trim_ascii_start().starts_with(b"#") {
            continue;
        }
        let fields = split_line(text).map_err(|m| LcaError::parse(file, line, m))?;
        if !header_seen {
            let got = fields.join(",");
            if got != schema.header_line() {
                return Err(LcaError::parse(
                    file,
                    line,
                    format!("header `{got}` does not match `{}`", schema.header_line()),
                ));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != schema.columns.len() {
            return Err(LcaError::parse(
                file,
                line,
                format!("expected {} fields, found {}", schema.columns.len(), fields.len()),
            ));
        }
        rows.push(Row { line, fields, file });
    }
    if !header_seen {
        return Err(LcaError::parse(file, 2, format!("missing header `{}`", schema.header_line())));
    }
    Ok(rows)
}
