use std::path::Path;

use super::{FilterReport, FlagSource};
use crate::data::Mask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// A cell is removed if any filter removed it.
    Union,
    /// A cell is removed only if every filter removed it.
    Intersection,
}

/// Combines observation masks (`false` = removed).
pub fn combine_filters(masks: &[Mask], mode: CombineMode) -> Result<Mask> {
    let first = masks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no masks to combine".into()))?;
    let mut out = first.clone();
    for m in &masks[1..] {
        if m.dims() != first.dims() {
            return Err(Error::MaskDimensionMismatch {
                expected_rows: first.rows(),
                expected_cols: first.cols(),
                detail: format!("got {}x{}", m.rows(), m.cols()),
            });
        }
        out = match mode {
            CombineMode::Union => out.and(m),
            CombineMode::Intersection => out.or(m),
        };
    }
    Ok(out)
}

/// Merges an externally produced mask into a filter report. Cells missing on
/// input stay missing whatever the external mask says.
pub fn apply_external(report: &FilterReport, external: &Mask, input: &Mask, mode: CombineMode) -> Result<FilterReport> {
    let mask = combine_filters(&[report.mask.clone(), external.clone()], mode)?.and(input);
    let (n, p) = input.dims();
    let mut flagged_by = vec![FlagSource::None; n * p];
    for i in 0..n {
        for j in 0..p {
            if !input.get(i, j) || mask.get(i, j) {
                continue;
            }
            let own = report.source(i, j);
            flagged_by[i * p + j] = match mode {
                CombineMode::Intersection => FlagSource::Intersection,
                CombineMode::Union if own != FlagSource::None => own,
                CombineMode::Union => FlagSource::External,
            };
        }
    }
    let mut out = FilterReport {
        mask,
        flagged_by,
        per_column_fraction: Vec::new(),
        m_counts: report.m_counts.clone(),
        c_counts: report.c_counts.clone(),
        skipped_pairs: report.skipped_pairs.clone(),
    };
    out.recompute_fractions(input);
    Ok(out)
}

/// Parses a mask of 0/1 integers separated by commas or whitespace, one row per line.
pub fn parse_mask(text: &str, rows: usize, cols: usize) -> Result<Mask> {
    let mut out = Vec::with_capacity(rows);
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::MaskParse {
                    line: line_no + 1,
                    msg: format!("expected 0 or 1, found {:?}", other),
                }),
            })
            .collect::<Result<Vec<bool>>>()?;
        if row.len() != cols {
            return Err(Error::MaskDimensionMismatch {
                expected_rows: rows,
                expected_cols: cols,
                detail: format!("line {} has {} entries", line_no + 1, row.len()),
            });
        }
        out.push(row);
    }
    if out.len() != rows {
        return Err(Error::MaskDimensionMismatch {
            expected_rows: rows,
            expected_cols: cols,
            detail: format!("found {} rows", out.len()),
        });
    }
    Mask::from_rows(&out)
}

pub fn load_mask(path: &Path, rows: usize, cols: usize) -> Result<Mask> {
    let text = std::fs::read_to_string(path)?;
    parse_mask(&text, rows, cols)
}
