use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::design::format_g17;

#[derive(Debug, Clone, PartialEq)]
pub enum CsvError {
    Io(String),
    Header(String),
    Shape {
        line: u64,
        fields: usize,
    },
    NotNumeric {
        line: u64,
        column: &'static str,
        text: String,
    },
    NotFinite {
        line: u64,
        column: &'static str,
        text: String,
    },
    NotIncreasing {
        line: u64,
        time: f64,
        previous: f64,
    },
    Empty,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvError::Io(e) => write!(f, "cannot read input: {e}"),
            CsvError::Header(h) => write!(f, "expected header \"t,y\", found \"{h}\""),
            CsvError::Shape { line, fields } => {
                write!(f, "line {line}: expected 2 fields, found {fields}")
            }
            CsvError::NotNumeric { line, column, text } => {
                write!(
                    f,
                    "line {line}: non-numeric value \"{text}\" in column {column}"
                )
            }
            CsvError::NotFinite { line, column, text } => {
                write!(
                    f,
                    "line {line}: non-finite value \"{text}\" in column {column}"
                )
            }
            CsvError::NotIncreasing {
                line,
                time,
                previous,
            } => write!(
                f,
                "line {line}: time {time} does not increase (previous {previous})"
            ),
            CsvError::Empty => write!(f, "input has no samples"),
        }
    }
}

fn parse_field(text: &str, line: u64, column: &'static str) -> Result<f64, CsvError> {
    let text = text.trim();
    let v: f64 = text.parse().map_err(|_| CsvError::NotNumeric {
        line,
        column,
        text: text.to_string(),
    })?;
    if !v.is_finite() {
        return Err(CsvError::NotFinite {
            line,
            column,
            text: text.to_string(),
        });
    }
    Ok(v)
}

/// Parses a `t,y` CSV into strictly increasing times and their values.
pub fn parse_signal(bytes: &[u8]) -> Result<(Vec<f64>, Vec<f64>), CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| CsvError::Io(e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["t", "y"] {
        return Err(CsvError::Header(names.join(",")));
    }
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Io(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(CsvError::Shape {
                line,
                fields: record.len(),
            });
        }
        let ti = parse_field(&record[0], line, "t")?;
        let yi = parse_field(&record[1], line, "y")?;
        if let Some(&previous) = t.last() {
            if ti <= previous {
                return Err(CsvError::NotIncreasing {
                    line,
                    time: ti,
                    previous,
                });
            }
        }
        t.push(ti);
        y.push(yi);
    }
    if t.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok((t, y))
}

/// Writes a CSV with the given header; numbers use 17 significant digits.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

pub fn num(v: f64) -> String {
    format_g17(v)
}
