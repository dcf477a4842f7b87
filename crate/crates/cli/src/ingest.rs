//! CSV ingestion. Rows with a blank cell in any used column are dropped and
//! counted; everything else must parse as a finite number.

use std::path::Path;

use gpcs::geometry::{BivariatePoint, BivariateSample};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Header plus raw string cells.
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> CliResult<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(CliError::Parse(format!("{}: missing header row", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(RawTable { columns, rows })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::Parse(format!("{}: {other:?}", path.display())),
        }
    } else {
        CliError::Parse(format!("{}: {e}", path.display()))
    }
}

impl RawTable {
    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::InvalidArgs(format!("no column named {name:?}")))
    }

    fn cell(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map_or("", String::as_str)
    }

    fn complete_rows(&self, cols: &[usize]) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| cols.iter().all(|&c| !self.cell(r, c).is_empty()))
            .collect()
    }

    fn number(&self, row: usize, col: usize) -> CliResult<f64> {
        let cell = self.cell(row, col);
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::Parse(format!(
                "row {}, column {:?}: {cell:?} is not a finite number",
                row + 2,
                self.columns[col]
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelCode {
    pub value: String,
    pub code: usize,
}

pub struct PairData {
    pub sample: BivariateSample,
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Label values in order of first appearance, coded `1..=K`.
    pub label_mapping: Option<Vec<LabelCode>>,
}

pub fn ingest_pair(path: &Path, x: &str, y: &str, label: Option<&str>) -> CliResult<PairData> {
    let table = read_table(path)?;
    let xc = table.column(x)?;
    let yc = table.column(y)?;
    let lc = label.map(|l| table.column(l)).transpose()?;
    let used: Vec<usize> = [Some(xc), Some(yc), lc].into_iter().flatten().collect();
    let keep = table.complete_rows(&used);

    let mut points = Vec::with_capacity(keep.len());
    for &r in &keep {
        points.push(BivariatePoint::new(table.number(r, xc)?, table.number(r, yc)?));
    }
    let (sample, label_mapping) = match lc {
        None => (BivariateSample::new(points)?, None),
        Some(c) => {
            let mut mapping: Vec<LabelCode> = Vec::new();
            let mut labels = Vec::with_capacity(keep.len());
            for &r in &keep {
                let value = table.cell(r, c);
                let code = match mapping.iter().find(|m| m.value == value) {
                    Some(m) => m.code,
                    None => {
                        mapping.push(LabelCode { value: value.to_string(), code: mapping.len() + 1 });
                        mapping.len()
                    }
                };
                labels.push(code);
            }
            (BivariateSample::with_labels(points, labels)?, Some(mapping))
        }
    };
    Ok(PairData { sample, rows_read: table.rows.len(), rows_dropped: table.rows.len() - keep.len(), label_mapping })
}

/// Numeric columns for an all-pairs scan.
pub struct Matrix {
    pub names: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Columns left out because some cell is not numeric.
    pub skipped: Vec<String>,
}

/// Loads the named columns, or every numeric column when `names` is empty.
pub fn ingest_matrix(path: &Path, names: &[String]) -> CliResult<Matrix> {
    let table = read_table(path)?;
    let (cols, skipped) = if names.is_empty() {
        let mut cols = Vec::new();
        let mut skipped = Vec::new();
        for (c, name) in table.columns.iter().enumerate() {
            let numeric = (0..table.rows.len()).all(|r| {
                let cell = table.cell(r, c);
                cell.is_empty() || cell.parse::<f64>().is_ok_and(f64::is_finite)
            });
            if numeric {
                cols.push(c);
            } else {
                skipped.push(name.clone());
            }
        }
        (cols, skipped)
    } else {
        (names.iter().map(|n| table.column(n)).collect::<CliResult<Vec<_>>>()?, Vec::new())
    };
    if cols.len() < 2 {
        return Err(CliError::InvalidArgs(format!("need at least 2 numeric columns, found {}", cols.len())));
    }
    let keep = table.complete_rows(&cols);
    let mut columns = vec![Vec::with_capacity(keep.len()); cols.len()];
    for &r in &keep {
        for (j, &c) in cols.iter().enumerate() {
            columns[j].push(table.number(r, c)?);
        }
    }
    Ok(Matrix {
        names: cols.iter().map(|&c| table.columns[c].clone()).collect(),
        columns,
        rows_read: table.rows.len(),
        rows_dropped: table.rows.len() - keep.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn collinear_rows() {
        let f = file("x,y\n0,0\n1,1\n2,2\n");
        let d = ingest_pair(f.path(), "x", "y", None).unwrap();
        assert_eq!(d.sample.len(), 3);
        assert_eq!(d.rows_dropped, 0);
        assert!(d.label_mapping.is_none());
    }

    #[test]
    fn text_labels_coded_by_first_appearance() {
        let f = file("x,y,tissue\n0,1,root\n1,2,shoot\n2,2,root\n3,1,shoot\n");
        let d = ingest_pair(f.path(), "x", "y", Some("tissue")).unwrap();
        assert_eq!(d.sample.labels().unwrap(), &[1, 2, 1, 2]);
        let m = d.label_mapping.unwrap();
        assert_eq!((m[0].value.as_str(), m[0].code), ("root", 1));
        assert_eq!((m[1].value.as_str(), m[1].code), ("shoot", 2));
    }

    #[test]
    fn blank_cell_drops_row() {
        let f = file("x,y\n0,0\n1,\n2,2\n3,5\n");
        let d = ingest_pair(f.path(), "x", "y", None).unwrap();
        assert_eq!(d.sample.len(), 3);
        assert_eq!(d.rows_dropped, 1);
    }

    #[test]
    fn bad_cell_is_a_parse_error() {
        let f = file("x,y\n0,0\n1,abc\n2,2\n");
        let err = ingest_pair(f.path(), "x", "y", None).err().unwrap();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn missing_column_and_file() {
        let f = file("x,y\n0,0\n");
        assert_eq!(ingest_pair(f.path(), "x", "z", None).err().unwrap().exit_code(), 2);
        let gone = Path::new("/definitely/not/here.csv");
        assert_eq!(ingest_pair(gone, "x", "y", None).err().unwrap().exit_code(), 3);
    }

    #[test]
    fn matrix_skips_text_columns() {
        let f = file("gene,a,b,c\ng1,1,2,3\ng2,2,,1\ng3,3,1,2\n");
        let m = ingest_matrix(f.path(), &[]).unwrap();
        assert_eq!(m.names, vec!["a", "b", "c"]);
        assert_eq!(m.skipped, vec!["gene"]);
        assert_eq!(m.rows_dropped, 1);
        assert_eq!(m.columns[0], vec![1.0, 3.0]);
    }
}
