//! Numeric CSV ingestion for the total-correlation game.

use std::path::Path;

use shapkadd_core::entropy::{discretize, TotalCorrelationGame, DEFAULT_BINS};

use crate::error::{Error, Result};

/// Header names plus row-major numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_numeric_csv<R: std::io::Read>(reader: R) -> Result<NumericTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::Format("CSV has no columns".into()));
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::Format(format!(
                            "row {} column {:?}: {cell:?} is not a finite number",
                            r + 1,
                            headers[c]
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV has a header but no data rows".into()));
    }
    Ok(NumericTable { headers, rows })
}

pub fn load_numeric_csv(path: impl AsRef<Path>) -> Result<NumericTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_numeric_csv(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Total-correlation game over the discretized columns of a CSV file.
pub fn load_total_correlation(
    path: impl AsRef<Path>,
    bins: Option<usize>,
) -> Result<TotalCorrelationGame> {
    let table = load_numeric_csv(path)?;
    let data = discretize(&table.rows, bins.unwrap_or(DEFAULT_BINS))?;
    Ok(TotalCorrelationGame::new(data)?)
}
