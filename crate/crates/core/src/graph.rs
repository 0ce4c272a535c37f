//! Undirected, unweighted graphs and the operators built from them.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// An undirected graph with a binary, symmetric, zero-diagonal adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: SparseMatrix,
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph from an edge list.
    ///
    /// Every pair is inserted in both directions, duplicates collapse and
    /// self-loops are dropped, so the result does not depend on edge order.
    pub fn build(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut pairs = Vec::with_capacity(edges.len() * 2);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) has an endpoint outside 0..{n}"
                )));
            }
            if i != j {
                pairs.push((i, j));
                pairs.push((j, i));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let adjacency = SparseMatrix::from_triplets(n, n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))?;
        let degrees = adjacency.row_sums();
        Ok(Graph { n, adjacency, degrees })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().filter(|&(i, j, _)| i < j).map(|(i, j, _)| (i, j))
    }

    /// `D̃^{-1/2} (A + I) D̃^{-1/2}` where `D̃` is the degree matrix of `A + I`.
    pub fn renormalized_adjacency(&self) -> SparseMatrix {
        let d = &self.degrees;
        let with_loops = self
            .adjacency
            .add_scaled(&SparseMatrix::identity(self.n), 1.0)
            .expect("square adjacency");
        with_loops.map_entries(|i, j, v| v / ((d[i] + 1.0) * (d[j] + 1.0)).sqrt())
    }

    /// Combinatorial Laplacian `D − A`.
    pub fn laplacian(&self) -> SparseMatrix {
        SparseMatrix::diagonal(&self.degrees)
            .add_scaled(&self.adjacency, -1.0)
            .expect("square adjacency")
    }

    /// Symmetric normalized Laplacian `I − D^{-1/2} A D^{-1/2}`. Isolated
    /// nodes keep a unit diagonal.
    pub fn normalized_laplacian(&self) -> SparseMatrix {
        let d = &self.degrees;
        // Entries only exist between nodes of positive degree.
        let scaled = self.adjacency.map_entries(|i, j, v| v / (d[i] * d[j]).sqrt());
        SparseMatrix::identity(self.n)
            .add_scaled(&scaled, -1.0)
            .expect("square adjacency")
    }
}
