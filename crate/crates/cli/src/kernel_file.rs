//! Plain numeric CSV files: kernels (square, symmetric) and point clouds.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// Largest tolerated `|A_ij - A_ji|` in a kernel file.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Reads a headerless CSV of finite reals with rows of equal length.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text).map_err(|message| CliError::Data { path: path.to_owned(), message })
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| format!("line {line}, column {}: cannot parse {field:?} as a number", col + 1))?;
            if !value.is_finite() {
                return Err(format!("line {line}, column {}: non-finite entry {field}", col + 1));
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!("line {line}: expected {} columns, found {}", first.len(), row.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Reads a square kernel, rejects asymmetry above [`SYMMETRY_TOL`] and
/// returns the exactly symmetrized matrix.
pub fn read_kernel(path: &Path) -> Result<DMatrix<f64>> {
    let m = read_matrix(path)?;
    check_kernel(m).map_err(|message| CliError::Data { path: path.to_owned(), message })
}

pub fn check_kernel(m: DMatrix<f64>) -> Result<DMatrix<f64>, String> {
    if m.nrows() != m.ncols() {
        return Err(format!("kernel must be square, got {} rows of {} columns", m.nrows(), m.ncols()));
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL {
                return Err(format!(
                    "asymmetric entries at line {}, column {} and line {}, column {} (differ by {gap:e})",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                ));
            }
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_square_kernel() {
        let m = check_kernel(parse_matrix("2, 0.5\n0.5, 3\n").unwrap()).unwrap();
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(1, 1)], 3.0);
    }

    #[test]
    fn reports_position_of_bad_field() {
        let err = parse_matrix("1,2\n3,x\n").unwrap_err();
        assert!(err.contains("line 2, column 2"), "{err}");
        let err = parse_matrix("1,2\n3,inf\n").unwrap_err();
        assert!(err.contains("non-finite") && err.contains("line 2, column 2"), "{err}");
        let err = parse_matrix("1,2\n3\n").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn symmetry_tolerance() {
        assert!(check_kernel(parse_matrix("1,0.5\n0.500000001,1").unwrap()).is_ok());
        let err = check_kernel(parse_matrix("1,0.5\n0.5001,1").unwrap()).unwrap_err();
        assert!(err.contains("line 1, column 2"), "{err}");
        assert!(check_kernel(parse_matrix("1,2,3\n4,5,6").unwrap()).is_err());
    }
}
