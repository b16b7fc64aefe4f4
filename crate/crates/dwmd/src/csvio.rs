//! CSV feature files: UTF-8, header row, comma separated, dot decimals.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use dwmd_core::{Matrix, SampleMatrix};

use crate::data::Dataset;
use crate::error::{io_err, HarnessError, Result};

/// Name of the label column written by [`write_dataset`].
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub samples: SampleMatrix,
    pub labels: Option<Vec<usize>>,
    /// Feature column names, in order.
    pub columns: Vec<String>,
}

/// Reads a feature table. With `label_column` set, that column must exist and
/// hold non-negative integer labels; it is removed from the features.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<LoadedCsv> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let file_err = |reason: String| HarnessError::CsvFile { path: path.to_path_buf(), reason };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| file_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| file_err(format!("label column `{name}` not found in header")))?,
        ),
        None => None,
    };
    let columns: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if columns.is_empty() {
        return Err(file_err("no feature columns".into()));
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| file_err(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell_err = |col: usize, reason: String| HarnessError::Csv {
            path: path.to_path_buf(),
            line,
            column: header.get(col).cloned().unwrap_or_else(|| format!("#{}", col + 1)),
            reason,
        };
        if record.len() != header.len() {
            return Err(cell_err(
                record.len().min(header.len()),
                format!("row has {} fields, header has {}", record.len(), header.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if Some(col) == label_idx {
                let y = cell
                    .parse::<usize>()
                    .map_err(|_| cell_err(col, format!("`{cell}` is not a non-negative integer label")))?;
                labels.push(y);
            } else {
                let v = cell
                    .parse::<f64>()
                    .map_err(|_| cell_err(col, format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(cell_err(col, format!("`{cell}` is not finite")));
                }
                data.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(file_err("no data rows".into()));
    }
    let samples = SampleMatrix::from_vec(rows, columns.len(), data)?;
    Ok(LoadedCsv {
        samples,
        labels: label_idx.map(|_| labels),
        columns,
    })
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn exact(v: f64) -> String {
    format!("{v}")
}

/// Writes `x0..x{d-1}` feature columns, plus a label column when given.
pub fn write_matrix(path: &Path, samples: &Matrix, labels: Option<&[usize]>) -> Result<()> {
    let mut out = String::new();
    let mut header: Vec<String> = (0..samples.cols()).map(|j| format!("x{j}")).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..samples.rows() {
        let mut cells: Vec<String> = samples.row(i).iter().map(|&v| exact(v)).collect();
        if let Some(l) = labels {
            cells.push(l[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io_err(path))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_matrix(path, data.samples.matrix(), Some(&data.labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn reads_plain_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "a,b\n1,2\n3,4\n5,6\n");
        let got = load_csv(&p, None).unwrap();
        assert_eq!(got.samples.matrix().as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(got.columns, ["a", "b"]);
        assert_eq!(got.labels, None);
    }

    #[test]
    fn extracts_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "x,y,z\n1.5,0,2\n-3e-2,1,4\n");
        let got = load_csv(&p, Some("y")).unwrap();
        assert_eq!(got.labels, Some(vec![0, 1]));
        assert_eq!(got.samples.matrix().as_slice(), &[1.5, 2.0, -0.03, 4.0]);
        assert_eq!(got.columns, ["x", "z"]);
    }

    #[test]
    fn errors_carry_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "bad.csv", "a,b\n1,2\n3,oops\n");
        let msg = load_csv(&p, None).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("column b") && msg.contains("oops"), "{msg}");

        let p = write_tmp(&dir, "ragged.csv", "a,b\n1,2\n3\n");
        let msg = load_csv(&p, None).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("1 fields"), "{msg}");

        let p = write_tmp(&dir, "nolabel.csv", "a,b\n1,2\n");
        let msg = load_csv(&p, Some("label")).unwrap_err().to_string();
        assert!(msg.contains("label column `label` not found"), "{msg}");

        let p = write_tmp(&dir, "neg.csv", "a,label\n1,-1\n");
        assert!(load_csv(&p, Some("label")).is_err());

        let p = write_tmp(&dir, "comma.csv", "a\n\"1,5\"\n");
        assert!(load_csv(&p, None).is_err());

        assert!(matches!(
            load_csv(&dir.path().join("missing.csv"), None),
            Err(HarnessError::Io { .. })
        ));
    }

    #[test]
    fn dataset_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let values = vec![0.1, -1.0 / 3.0, 1e-300, 123456789.123456789, f64::MAX, -0.0];
        let samples = SampleMatrix::from_vec(3, 2, values).unwrap();
        let data = Dataset::new(samples, vec![2, 0, 1]).unwrap();
        let p = dir.path().join("d.csv");
        write_dataset(&p, &data).unwrap();
        let back = load_csv(&p, Some(LABEL_COLUMN)).unwrap();
        assert_eq!(back.samples, data.samples);
        assert_eq!(back.labels.unwrap(), data.labels);
    }
}
