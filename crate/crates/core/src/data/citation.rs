//! The plain-text citation format.
//!
//! `<name>.content` has one node per line, `<id> <f_1> ... <f_m> <label>`;
//! `<name>.cites` has one edge per line, `<cited_id> <citing_id>`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

/// Loads a citation network with row-normalized features.
pub fn load_citation(content: &Path, cites: &Path) -> Result<Dataset> {
    load_citation_with(content, cites, true)
}

pub fn load_citation_with(content: &Path, cites: &Path, row_normalize: bool) -> Result<Dataset> {
    let content_text = std::fs::read_to_string(content).map_err(|e| Error::io(content, e))?;
    let cites_text = std::fs::read_to_string(cites).map_err(|e| Error::io(cites, e))?;

    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width = None;
    for (lineno, line) in content_text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: content.to_path_buf(),
            line: lineno + 1,
            message,
        };
        if tokens.len() < 2 {
            return Err(parse_err("expected `<id> <features...> <label>`".into()));
        }
        let (id, rest) = (tokens[0], &tokens[1..]);
        let (label, feats) = rest.split_last().expect("at least one token");
        match width {
            None => width = Some(feats.len()),
            Some(w) if w != feats.len() => {
                return Err(Error::Format {
                    path: content.to_path_buf(),
                    message: format!("line {}: {} features, expected {w}", lineno + 1, feats.len()),
                })
            }
            Some(_) => {}
        }
        if index.insert(id, index.len()).is_some() {
            return Err(parse_err(format!("duplicate node id `{id}`")));
        }
        for f in feats {
            let v: f64 = f
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(format!("bad feature value `{f}`")))?;
            values.push(v);
        }
        raw_labels.push(*label);
    }
    let n = raw_labels.len();
    if n == 0 {
        return Err(Error::Format {
            path: content.to_path_buf(),
            message: "no nodes".into(),
        });
    }
    let m = width.unwrap_or(0);

    let mut class_names: Vec<String> = raw_labels.iter().map(|s| s.to_string()).collect();
    class_names.sort();
    class_names.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| {
            class_names
                .binary_search_by(|c| c.as_str().cmp(l))
                .expect("collected above")
        })
        .collect();

    let mut edges = Vec::new();
    let mut skipped_edges = 0;
    for (lineno, line) in cites_text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [a, b] => match (index.get(a), index.get(b)) {
                (Some(&i), Some(&j)) => edges.push((i, j)),
                _ => skipped_edges += 1,
            },
            _ => {
                return Err(Error::Parse {
                    path: cites.to_path_buf(),
                    line: lineno + 1,
                    message: "expected `<cited_id> <citing_id>`".into(),
                })
            }
        }
    }
    if skipped_edges > 0 {
        log::warn!(
            "{}: skipped {skipped_edges} citations with unknown ids",
            cites.display()
        );
    }

    let mut features = DenseMatrix::from_vec(n, m, values)?;
    if row_normalize {
        for i in 0..n {
            let row = features.row_mut(i);
            let sum: f64 = row.iter().sum();
            if sum != 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }

    let name = content
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dataset = Dataset {
        name,
        graph: Graph::build(n, &edges)?,
        features,
        labels,
        class_names,
        skipped_edges,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes `dir/<name>.content` and `dir/<name>.cites`, using node indices as ids.
pub fn write_citation(dataset: &Dataset, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let content = dir.join(format!("{}.content", dataset.name));
    let cites = dir.join(format!("{}.cites", dataset.name));

    let mut text = String::new();
    for i in 0..dataset.node_count() {
        let _ = write!(text, "{i}");
        for v in dataset.features.row(i) {
            let _ = write!(text, "\t{v}");
        }
        let _ = writeln!(text, "\t{}", dataset.class_names[dataset.labels[i]]);
    }
    std::fs::write(&content, text).map_err(|e| Error::io(&content, e))?;

    let mut text = String::new();
    for (i, j) in dataset.graph.edges() {
        let _ = writeln!(text, "{i}\t{j}");
    }
    std::fs::write(&cites, text).map_err(|e| Error::io(&cites, e))?;
    Ok((content, cites))
}
