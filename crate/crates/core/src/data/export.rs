//! Embedding tables: header `node_index,label,z_1,...,z_d`, then one row
//! per node. Floats use the shortest decimal that parses back to the same
//! value, so `1.0` is written as `1`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub fn export_embeddings(z: &DenseMatrix, labels: &[usize], path: &Path) -> Result<()> {
    if labels.len() != z.rows() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} embedding rows",
            labels.len(),
            z.rows()
        )));
    }
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["node_index".to_string(), "label".to_string()];
    header.extend((1..=z.cols()).map(|j| format!("z_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, &label) in labels.iter().enumerate() {
        let mut record = vec![i.to_string(), label.to_string()];
        record.extend(z.row(i).iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// An embedding file read back.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub labels: Vec<usize>,
    pub embeddings: DenseMatrix,
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("{other:?}")),
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let dim = r
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .len()
        .saturating_sub(2);
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (row, record) in r.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != dim + 2 {
            return Err(parse_err(
                line,
                format!("{} fields, expected {}", record.len(), dim + 2),
            ));
        }
        if record[0].parse::<usize>().ok() != Some(row) {
            return Err(parse_err(line, format!("node_index `{}`, expected {row}", &record[0])));
        }
        labels.push(
            record[1]
                .parse()
                .map_err(|_| parse_err(line, format!("bad label `{}`", &record[1])))?,
        );
        for field in record.iter().skip(2) {
            values.push(
                field
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad value `{field}`")))?,
            );
        }
    }
    Ok(EmbeddingTable {
        embeddings: DenseMatrix::from_vec(labels.len(), dim, values)?,
        labels,
    })
}
