//! Numeric CSV input with missing values.

use std::path::Path;

use robscatter::{Dataset, Error, Result};

/// A parsed input table.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: Dataset,
}

fn is_missing(field: &str, na_token: &str) -> bool {
    field.is_empty() || field == na_token
}

/// A first record is a header if any field is neither numeric nor missing.
fn looks_like_header(record: &csv::StringRecord, na_token: &str) -> bool {
    record
        .iter()
        .map(str::trim)
        .any(|f| !is_missing(f, na_token) && f.parse::<f64>().is_err())
}

/// Parses comma-separated numeric data. Empty fields and `na_token` are
/// missing; a non-numeric first line is taken as the header. Rows and columns
/// in errors are 1-based and count data rows only.
pub fn parse_table(text: &str, na_token: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { row: i + 1, column: 0, msg: e.to_string() })?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        records.push(rec);
    }
    let first = records.first().ok_or(Error::EmptySample)?;
    let header = looks_like_header(first, na_token);
    let p = first.len();
    let columns: Vec<String> = if header {
        first.iter().map(|s| s.trim().to_string()).collect()
    } else {
        (1..=p).map(|j| format!("V{}", j)).collect()
    };
    let body = &records[usize::from(header)..];
    if body.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rows = Vec::with_capacity(body.len());
    for (i, rec) in body.iter().enumerate() {
        if rec.len() != p {
            return Err(Error::Parse {
                row: i + 1,
                column: rec.len().min(p) + 1,
                msg: format!("expected {} fields, found {}", p, rec.len()),
            });
        }
        let mut row = Vec::with_capacity(p);
        for (j, field) in rec.iter().map(str::trim).enumerate() {
            if is_missing(field, na_token) {
                row.push(None);
                continue;
            }
            let bad = |msg: String| Error::Parse { row: i + 1, column: j + 1, msg };
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("{:?} in column {:?} is not a number", field, columns[j])))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {:?}", field)));
            }
            row.push(Some(v));
        }
        rows.push(row);
    }
    Ok(Table { columns, data: Dataset::from_rows(&rows)? })
}

pub fn read_table(path: &Path, na_token: &str) -> Result<Table> {
    parse_table(&std::fs::read_to_string(path)?, na_token)
}
