use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use super::{parse, SmilesError};
use crate::molgraph::MolGraph;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
}

/// Why a row was dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    Smiles(SmilesError),
    BadLabel { column: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    /// Zero-based data row index (header excluded).
    pub row: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone)]
pub struct Record {
    pub row: usize,
    pub smiles: String,
    pub graph: MolGraph,
    /// One entry per requested label column; `None` marks a missing label.
    pub labels: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub skipped: Vec<SkippedRow>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn graphs(&self) -> Vec<&MolGraph> {
        self.records.iter().map(|r| &r.graph).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Reads a headed CSV file with a `smiles` column and optional numeric label
/// columns. Rows that fail to parse are counted in `skipped`; record order
/// follows file order.
pub fn read_dataset(
    path: &Path,
    label_columns: Option<&[String]>,
) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset_str(&text, label_columns)
}

pub(crate) fn read_dataset_str(
    text: &str,
    label_columns: Option<&[String]>,
) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let smiles_col = column("smiles")?;
    let label_names: Vec<String> = label_columns.map(<[String]>::to_vec).unwrap_or_default();
    let label_cols = label_names
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>, _>>()?;

    let rows = reader.records().collect::<Result<Vec<_>, _>>()?;
    let parsed: Vec<Result<Record, SkippedRow>> = rows
        .par_iter()
        .enumerate()
        .map(|(row, rec)| {
            let smiles = rec.get(smiles_col).unwrap_or("").trim().to_string();
            let graph = parse(&smiles).map_err(|e| SkippedRow {
                row,
                reason: SkipReason::Smiles(e),
            })?;
            let mut labels = Vec::with_capacity(label_cols.len());
            for (name, &col) in label_names.iter().zip(&label_cols) {
                let cell = rec.get(col).unwrap_or("").trim();
                if cell.is_empty() {
                    labels.push(None);
                } else {
                    let v: f64 = cell.parse().map_err(|_| SkippedRow {
                        row,
                        reason: SkipReason::BadLabel {
                            column: name.clone(),
                            value: cell.to_string(),
                        },
                    })?;
                    labels.push(Some(v));
                }
            }
            Ok(Record {
                row,
                smiles,
                graph,
                labels,
            })
        })
        .collect();

    let mut out = Dataset {
        label_names,
        ..Dataset::default()
    };
    for item in parsed {
        match item {
            Ok(r) => out.records.push(r),
            Err(s) => out.skipped.push(s),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_no_skips() {
        let d = read_dataset_str("smiles\nC\nCC\n", None).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.skipped.is_empty());
        assert_eq!(d.records[1].graph.num_atoms(), 2);
    }

    #[test]
    fn malformed_row_is_counted() {
        let d = read_dataset_str("smiles\nC\nC(\nCO\n", None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.skipped.len(), 1);
        assert_eq!(d.skipped[0].row, 1);
        assert_eq!(d.records[1].smiles, "CO");
    }

    #[test]
    fn labels_attach_in_row_order() {
        let d = read_dataset_str(
            "id,smiles,active\n1,C,0\n2,CC,1\n3,CCO,\n",
            Some(&["active".to_string()]),
        )
        .unwrap();
        let labels: Vec<_> = d.records.iter().map(|r| r.labels[0]).collect();
        assert_eq!(labels, vec![Some(0.0), Some(1.0), None]);
    }

    #[test]
    fn missing_columns_are_errors() {
        assert!(matches!(
            read_dataset_str("smi\nC\n", None),
            Err(DatasetError::MissingColumn(c)) if c == "smiles"
        ));
        assert!(matches!(
            read_dataset_str("smiles\nC\n", Some(&["y".to_string()])),
            Err(DatasetError::MissingColumn(c)) if c == "y"
        ));
    }

    #[test]
    fn unreadable_file_is_an_error() {
        let err = read_dataset(Path::new("/nonexistent/definitely/not.csv"), None).unwrap_err();
        assert!(matches!(err, DatasetError::Io { .. }));
    }
}
