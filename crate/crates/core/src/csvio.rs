//! CSV input and output. Files have a header row, comma separators and `.`
//! decimals.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::Point2;
use crate::pum::ScatteredData;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// `row` counts lines of the file, the header being line 1.
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn open(path: &Path) -> Result<std::fs::File, CsvError> {
    std::fs::File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<std::fs::File, CsvError> {
    std::fs::File::create(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads rows of `columns` numbers, checking the header names.
pub fn read_table<R: Read>(reader: R, columns: &[&str]) -> Result<Vec<Vec<f64>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| CsvError::Malformed {
        row: 1,
        message: e.to_string(),
    })?;
    let names: Vec<&str> = header.iter().collect();
    if names != columns {
        return Err(CsvError::Malformed {
            row: 1,
            message: format!("expected header {}, found {}", columns.join(","), names.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| CsvError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != columns.len() {
            return Err(CsvError::Malformed {
                row,
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(columns.len());
        for (cell, name) in rec.iter().zip(columns) {
            let v: f64 = cell.parse().map_err(|_| CsvError::Malformed {
                row,
                message: format!("column {name}: '{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CsvError::Malformed {
                    row,
                    message: format!("column {name}: '{cell}' is not finite"),
                });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    Ok(rows)
}

/// Scattered data from columns `x,y,f`.
pub fn read_points<R: Read>(reader: R) -> Result<ScatteredData, CsvError> {
    let rows = read_table(reader, &["x", "y", "f"])?;
    let sites = rows.iter().map(|r| Point2::new(r[0], r[1])).collect();
    let values = rows.iter().map(|r| r[2]).collect();
    Ok(ScatteredData { sites, values })
}

pub fn read_points_file(path: &Path) -> Result<ScatteredData, CsvError> {
    read_points(open(path)?)
}

/// Query points from columns `x,y`, or `x,y,f` with the values ignored.
pub fn read_queries_file(path: &Path) -> Result<Vec<Point2>, CsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let first = text.lines().next().unwrap_or("");
    let three = first.split(',').map(str::trim).collect::<Vec<_>>() == ["x", "y", "f"];
    let rows = if three {
        read_table(text.as_bytes(), &["x", "y", "f"])?
    } else {
        read_table(text.as_bytes(), &["x", "y"])?
    };
    Ok(rows.iter().map(|r| Point2::new(r[0], r[1])).collect())
}

/// Writes a header and rows of numbers in shortest round-trip form.
pub fn write_table<W: Write>(writer: W, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_table_file(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CsvError> {
    write_table(create(path)?, header, rows)
}

/// Writes records that are already strings.
pub fn write_records_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
