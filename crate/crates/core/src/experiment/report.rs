use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::results::{mean, std_dev, ExperimentResult};
use crate::metric_head::SimilarityKind;
use crate::trainer::Method;

type RowKey = (String, Method, bool, Option<SimilarityKind>);

/// Accuracy table (rows = methods, columns = label budgets, cells =
/// mean(std) in percent) followed by a table of mean seconds per run.
pub fn report_table(results: &[ExperimentResult]) -> String {
    if results.is_empty() {
        return "no results\n".to_string();
    }
    let rows: BTreeSet<RowKey> = results
        .iter()
        .map(|r| (r.dataset.clone(), r.method, r.shoestring, r.metric))
        .collect();
    let budgets: BTreeSet<usize> = results.iter().map(|r| r.labels_per_class).collect();
    let many_datasets = rows.iter().map(|r| &r.0).collect::<BTreeSet<_>>().len() > 1;

    let gather = |row: &RowKey, budget: usize, pick: fn(&ExperimentResult) -> &[f64]| -> Vec<f64> {
        results
            .iter()
            .filter(|r| (&r.dataset, r.method, r.shoestring, r.metric) == (&row.0, row.1, row.2, row.3))
            .filter(|r| r.labels_per_class == budget)
            .flat_map(|r| pick(r).iter().copied())
            .collect()
    };
    let label = |row: &RowKey| {
        let method = match (row.2, row.3) {
            (true, Some(m)) => format!("{}+{m}", row.1),
            _ => row.1.to_string(),
        };
        if many_datasets {
            format!("{}/{method}", row.0)
        } else {
            method
        }
    };

    let table = |title: &str, cell: &dyn Fn(&[f64]) -> String, pick: fn(&ExperimentResult) -> &[f64]| {
        let mut lines: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["method".to_string()];
        header.extend(budgets.iter().map(|b| b.to_string()));
        lines.push(header);
        for row in &rows {
            let mut line = vec![label(row)];
            for &b in &budgets {
                let values = gather(row, b, pick);
                line.push(if values.is_empty() {
                    "-".to_string()
                } else {
                    cell(&values)
                });
            }
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|j| lines.iter().map(|l| l[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{title}\n");
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if j == 0 {
                        format!("{c:<w$}", w = widths[j])
                    } else {
                        format!("{c:>w$}", w = widths[j])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    };
    let accuracy = table(
        "accuracy %, mean(std) over seeds, by labels per class",
        &|v| format!("{:.1}({:.1})", 100.0 * mean(v), 100.0 * std_dev(v)),
        |r| &r.accuracies,
    );
    let seconds = table(
        "wall-clock seconds per run, mean, by labels per class",
        &|v| format!("{:.3}", mean(v)),
        |r| &r.seconds,
    );
    format!("{accuracy}\n{seconds}")
}
