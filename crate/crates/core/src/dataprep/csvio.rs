use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Dataset, Matrix};
use crate::error::{Error, Result};

/// Reads a CSV with a header row. Every column other than `response` is a
/// numeric covariate; empty cells become `NaN` (missing).
pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let resp_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::MissingResponse(response.to_string()))?;
    let column_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != resp_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::DimensionMismatch {
                what: "CSV record width",
                expected: headers.len(),
                got: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::ParseCell {
                    row,
                    column: headers[col].clone(),
                    value: cell.to_string(),
                })?
            };
            if col == resp_col {
                if value.is_nan() {
                    return Err(Error::MissingResponseValue { row });
                }
                y.push(value);
            } else {
                data.push(value);
            }
        }
    }
    let x = Matrix::from_row_major(y.len(), column_names.len(), data)?;
    Dataset::new(x, y, column_names, response)
}

/// Reads the named columns of a CSV, in the order given, for prediction on
/// new data. Other columns (including any response) are ignored.
pub fn load_covariates(path: impl AsRef<Path>, columns: &[String]) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::Format(format!("column {c:?} not found in {}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::new();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for &i in &idx {
            let cell = record.get(i).unwrap_or("").trim();
            data.push(if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::ParseCell {
                    row,
                    column: headers[i].clone(),
                    value: cell.to_string(),
                })?
            });
        }
        rows += 1;
    }
    Matrix::from_row_major(rows, columns.len(), data)
}

/// Writes covariates followed by the response column. Missing cells are
/// written empty; numbers use the shortest representation that parses back
/// to the same `f64`.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let header: Vec<&str> = data
        .column_names
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(data.response_name.as_str()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..data.n() {
        for v in data.x.row(r) {
            if !v.is_nan() {
                out.push_str(&v.to_string());
            }
            out.push(',');
        }
        out.push_str(&data.y[r].to_string());
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
