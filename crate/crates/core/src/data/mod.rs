//! Datasets: citation networks, synthetic block models, label splits and
//! embedding export.

mod citation;
mod export;
mod sbm;
mod split;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

pub use citation::{load_citation, load_citation_with, write_citation};
pub use export::{export_embeddings, read_embeddings, EmbeddingTable};
pub use sbm::{sbm_generate, SbmParams};
pub use split::{sample_split, SplitSpec};

/// Environment variable naming the default dataset root.
pub const DATA_DIR_ENV: &str = "SHOESTRING_DATA_DIR";

/// A labeled graph with node features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    /// One row per node, aligned with graph indexing.
    pub features: DenseMatrix,
    /// Class index of every node, in `0..class_names.len()`.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Citation lines dropped because an endpoint was not a known node.
    pub skipped_edges: usize,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    /// Node indices of each class, ascending.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.classes()];
        for (i, &c) in self.labels.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// Checks alignment of graph, features and labels.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.features.rows() != n || self.labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "dataset `{}`: {n} nodes, {} feature rows, {} labels",
                self.name,
                self.features.rows(),
                self.labels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&c| c >= self.classes()) {
            return Err(Error::InvalidInput(format!(
                "dataset `{}`: label {bad} outside 0..{}",
                self.name,
                self.classes()
            )));
        }
        Ok(())
    }
}

/// Dataset root: the explicit directory if given, else `$SHOESTRING_DATA_DIR`,
/// else `./data`.
pub fn data_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(dir) => dir.to_path_buf(),
        None => std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("data")),
    }
}

/// Finds the `.content`/`.cites` pair for a dataset.
///
/// `dataset` may be a directory holding `<dir name>.content`, or a name
/// looked up as `<root>/<name>/<name>.content` and then `<root>/<name>.content`.
pub fn resolve_citation(dataset: &str, root: &Path) -> Result<(PathBuf, PathBuf)> {
    let as_path = Path::new(dataset);
    let mut candidates = Vec::new();
    if as_path.is_dir() {
        if let Some(stem) = as_path.file_name() {
            candidates.push(as_path.join(stem));
        }
    }
    candidates.push(root.join(dataset).join(dataset));
    candidates.push(root.join(dataset));
    for base in &candidates {
        let content = base.with_extension("content");
        let cites = base.with_extension("cites");
        if content.is_file() && cites.is_file() {
            return Ok((content, cites));
        }
    }
    Err(Error::Config(format!(
        "dataset `{dataset}` not found (looked for {})",
        candidates
            .iter()
            .map(|c| c.with_extension("content").display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    )))
}
