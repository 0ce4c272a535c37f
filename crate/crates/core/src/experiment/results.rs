use std::path::Path;

use crate::error::{Error, Result};
use crate::metric_head::SimilarityKind;
use crate::trainer::Method;

pub const CSV_HEADER: [&str; 8] = [
    "dataset",
    "method",
    "shoestring",
    "metric",
    "labels_per_class",
    "seed",
    "accuracy",
    "seconds",
];

/// A run that produced no accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

/// All runs of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub dataset: String,
    pub method: Method,
    pub shoestring: bool,
    /// `None` for baseline cells.
    pub metric: Option<SimilarityKind>,
    pub labels_per_class: usize,
    /// Absent when read back from CSV.
    pub fingerprint: Option<String>,
    /// Seeds of successful runs, aligned with `accuracies` and `seconds`.
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub seconds: Vec<f64>,
    pub failures: Vec<RunFailure>,
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    mean(&values.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>()).sqrt()
}

impl ExperimentResult {
    pub fn mean(&self) -> f64 {
        mean(&self.accuracies)
    }

    /// Population standard deviation of the accuracies.
    pub fn std(&self) -> f64 {
        std_dev(&self.accuracies)
    }

    pub fn mean_seconds(&self) -> f64 {
        mean(&self.seconds)
    }

    pub fn metric_name(&self) -> String {
        self.metric.map_or_else(|| "none".to_string(), |m| m.to_string())
    }

    /// Row label used in tables: `gcn` or `gcn+cos`.
    pub fn label(&self) -> String {
        match (self.shoestring, self.metric) {
            (true, Some(m)) => format!("{}+{m}", self.method),
            _ => self.method.to_string(),
        }
    }

    pub(crate) fn same_cell(&self, other: &ExperimentResult) -> bool {
        self.dataset == other.dataset
            && self.method == other.method
            && self.shoestring == other.shoestring
            && self.metric == other.metric
            && self.labels_per_class == other.labels_per_class
    }
}

pub fn write_results_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in results {
        for ((seed, accuracy), seconds) in r.seeds.iter().zip(&r.accuracies).zip(&r.seconds) {
            w.write_record([
                r.dataset.clone(),
                r.method.to_string(),
                r.shoestring.to_string(),
                r.metric_name(),
                r.labels_per_class.to_string(),
                seed.to_string(),
                accuracy.to_string(),
                seconds.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Groups CSV rows back into per-cell results, in order of first appearance.
pub fn read_results_csv(path: &Path) -> Result<Vec<ExperimentResult>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = r.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(parse_err(1, format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut results: Vec<ExperimentResult> = Vec::new();
    for (row, record) in r.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |i: usize| parse_err(line, format!("bad {} `{}`", CSV_HEADER[i], field(i)));
        let metric = match field(3) {
            "none" => None,
            m => Some(m.parse().map_err(|_| bad(3))?),
        };
        let parsed = ExperimentResult {
            dataset: field(0).to_string(),
            method: field(1).parse().map_err(|_| bad(1))?,
            shoestring: field(2).parse().map_err(|_| bad(2))?,
            metric,
            labels_per_class: field(4).parse().map_err(|_| bad(4))?,
            fingerprint: None,
            seeds: vec![field(5).parse().map_err(|_| bad(5))?],
            accuracies: vec![field(6).parse().map_err(|_| bad(6))?],
            seconds: vec![field(7).parse().map_err(|_| bad(7))?],
            failures: Vec::new(),
        };
        match results.iter_mut().find(|r| r.same_cell(&parsed)) {
            Some(existing) => {
                existing.seeds.extend(parsed.seeds);
                existing.accuracies.extend(parsed.accuracies);
                existing.seconds.extend(parsed.seconds);
            }
            None => results.push(parsed),
        }
    }
    Ok(results)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}
