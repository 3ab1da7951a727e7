//! CSV ingestion and table emission. Input requires a header row and all
//! numeric cells; the first offending cell is reported with its row and
//! column. Output tables are plain CSV with fixed per-command columns,
//! written atomically when a path is given.

use std::path::Path;

use ndarray::{Array1, Array2};

use splinemix_core::error::{Error, Result};
use splinemix_core::persist::atomic_write;

pub struct NumericTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::invalid(format!("{}: empty header row", path.display())));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(Error::invalid(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                i + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::invalid(format!(
                    "{}: missing value at row {}, column '{}'",
                    path.display(),
                    i + 1,
                    headers[j]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::invalid(format!(
                    "{}: non-numeric cell '{}' at row {}, column '{}'",
                    path.display(),
                    cell,
                    i + 1,
                    headers[j]
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no data rows", path.display())));
    }
    Ok(NumericTable { headers, rows })
}

/// Split a table into raw covariates and the named response column.
/// Range validation happens later, after any normalization.
pub fn read_xy(path: &Path, response: &str) -> Result<(Array2<f64>, Array1<f64>, Vec<String>)> {
    let table = read_numeric_csv(path)?;
    let y_col = table
        .headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| {
            Error::invalid(format!(
                "{}: response column '{response}' not found (columns: {})",
                path.display(),
                table.headers.join(", ")
            ))
        })?;
    let n = table.rows.len();
    let p = table.headers.len() - 1;
    if p == 0 {
        return Err(Error::invalid(format!(
            "{}: need at least one covariate column besides '{response}'",
            path.display()
        )));
    }
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    let mut names = Vec::with_capacity(p);
    for (j, h) in table.headers.iter().enumerate() {
        if j != y_col {
            names.push(h.clone());
        }
    }
    for (i, row) in table.rows.iter().enumerate() {
        let mut c = 0;
        for (j, &v) in row.iter().enumerate() {
            if j == y_col {
                y[i] = v;
            } else {
                x[[i, c]] = v;
                c += 1;
            }
        }
    }
    Ok((x, y, names))
}

/// Covariate matrix for prediction-style commands: the response column is
/// dropped when present so the same file used for fitting can be reused.
pub fn read_covariates(path: &Path, response: &str) -> Result<(Array2<f64>, Vec<String>)> {
    let table = read_numeric_csv(path)?;
    let skip = table.headers.iter().position(|h| h == response);
    let p = table.headers.len() - usize::from(skip.is_some());
    if p == 0 {
        return Err(Error::invalid(format!("{}: no covariate columns", path.display())));
    }
    let mut names = Vec::with_capacity(p);
    for (j, h) in table.headers.iter().enumerate() {
        if Some(j) != skip {
            names.push(h.clone());
        }
    }
    let n = table.rows.len();
    let mut x = Array2::zeros((n, p));
    for (i, row) in table.rows.iter().enumerate() {
        let mut c = 0;
        for (j, &v) in row.iter().enumerate() {
            if Some(j) != skip {
                x[[i, c]] = v;
                c += 1;
            }
        }
    }
    Ok((x, names))
}

/// An output table accumulated in memory and flushed as CSV.
pub struct TableWriter {
    buf: Vec<u8>,
}

impl TableWriter {
    pub fn new(headers: &[&str]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(headers.join(",").as_bytes());
        buf.push(b'\n');
        TableWriter { buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.extend_from_slice(cells.join(",").as_bytes());
        self.buf.push(b'\n');
    }

    /// Write to the path atomically, or to stdout when no path is given.
    pub fn finish(self, out: Option<&Path>) -> Result<()> {
        match out {
            Some(path) => atomic_write(path, &self.buf),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&self.buf)?;
                Ok(())
            }
        }
    }
}

/// Shortest round-trip representation.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
