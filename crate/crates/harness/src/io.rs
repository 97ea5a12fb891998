//! Dense CSV matrices and vectors: row-major, comma separated, no header.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{HarnessError, Result};

fn csv_err(path: &Path, msg: String) -> HarnessError {
    HarnessError::Csv {
        path: path.display().to_string(),
        msg,
    }
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    csv_err(
                        path,
                        format!("line {}: cannot parse `{}`", idx + 1, f.trim()),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(csv_err(
                    path,
                    format!(
                        "line {}: {} fields, expected {}",
                        idx + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_err(path, "no data".into()));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?, path)
}

/// Accepts a single row or a single column.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(csv_err(
            path,
            format!(
                "expected a vector, got a {}x{} matrix",
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    Ok(DVector::from_iterator(m.len(), m.iter().copied()))
}

/// Parses `1,2.5,-3` into a vector.
pub fn parse_list(text: &str) -> Result<DVector<f64>> {
    let vals = text
        .split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                HarnessError::Domain(format!("cannot parse `{}` as a number", f.trim()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(vals))
}

pub fn write_matrix<W: Write>(mut out: W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// One entry per line.
pub fn write_vector<W: Write>(mut out: W, v: &DVector<f64>) -> std::io::Result<()> {
    for x in v.iter() {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 0.1, 3.0, 1e-17, 7.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let back = parse_matrix(std::str::from_utf8(&buf).unwrap(), Path::new("m")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_matrix("1,2\n3\n", Path::new("m")).is_err());
        assert!(parse_matrix("1,x\n", Path::new("m")).is_err());
        assert!(parse_matrix("\n\n", Path::new("m")).is_err());
    }

    #[test]
    fn vectors_from_rows_or_columns() {
        let dir = tempfile::tempdir().unwrap();
        let col = dir.path().join("c.csv");
        std::fs::write(&col, "1\n2\n3\n").unwrap();
        let row = dir.path().join("r.csv");
        std::fs::write(&row, "1,2,3\n").unwrap();
        assert_eq!(read_vector(&col).unwrap(), read_vector(&row).unwrap());
        let bad = dir.path().join("b.csv");
        std::fs::write(&bad, "1,2\n3,4\n").unwrap();
        assert!(read_vector(&bad).is_err());
        assert_eq!(parse_list("1, 2,3").unwrap().len(), 3);
        assert!(parse_list("1,,3").is_err());
    }
}
