//! Label propagation by graph regularization, and the feature-filtering
//! pipeline that trains a classifier on smoothed features.
//!
//! Minimizing `‖Z − Y‖² + α Tr(Zᵀ L Z)` has the stationary condition
//! `(I + αL) Z = Y`, which is solved directly with conjugate gradients.

use crate::error::{Error, Result};
use crate::filters::{apply_filter, regularized_system, FilterKind, FilterSpec, Propagator};
use crate::graph::Graph;
use crate::linalg::{conjugate_gradient_solve, CgOptions, DenseMatrix, SparseMatrix};
use crate::trainer::{train_with_operator, ModelState, TrainConfig};

/// One-hot rows for labeled nodes, zero rows elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DenseMatrix);

impl LabelMatrix {
    pub fn new(n: usize, classes: usize, labels: &[usize], labeled: &[usize]) -> Result<Self> {
        let mut y = DenseMatrix::zeros(n, classes);
        for &i in labeled {
            if i >= n || labels[i] >= classes {
                return Err(Error::InvalidInput(format!(
                    "labeled node {i} (label {}) does not fit a {n}x{classes} label matrix",
                    labels.get(i).copied().unwrap_or(usize::MAX)
                )));
            }
            y.set(i, labels[i], 1.0);
        }
        Ok(LabelMatrix(y))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    fn has_labels(&self) -> bool {
        self.0.as_slice().iter().any(|&v| v != 0.0)
    }
}

/// Solves `(I + αL) Z = Y` with the combinatorial Laplacian of `g`.
pub fn lp_solve(g: &Graph, y: &LabelMatrix, alpha: f64) -> Result<DenseMatrix> {
    lp_solve_with(&g.laplacian(), y, alpha)
}

/// As [`lp_solve`], for any symmetric PSD Laplacian.
pub fn lp_solve_with(laplacian: &SparseMatrix, y: &LabelMatrix, alpha: f64) -> Result<DenseMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("lp_alpha must be > 0, got {alpha}")));
    }
    if !y.has_labels() {
        return Err(Error::InvalidInput(
            "label propagation needs at least one labeled node".into(),
        ));
    }
    let system = regularized_system(laplacian, alpha)?;
    conjugate_gradient_solve(&system, y.matrix(), CgOptions::default())
}

/// Row-wise argmax; ties go to the lowest class.
pub fn lp_predict(z: &DenseMatrix) -> Vec<usize> {
    z.row_argmax()
}

/// Filters `x` over the graph, then trains a two-layer perceptron on the
/// filtered features.
pub fn glp_pipeline(
    g: &Graph,
    x: &DenseMatrix,
    spec: &FilterSpec,
    labels: &[usize],
    labeled: &[usize],
    config: &TrainConfig,
) -> Result<ModelState> {
    if spec.kind == FilterKind::None {
        return Err(Error::Config(
            "the feature-filtering pipeline needs an rnm or ar filter".into(),
        ));
    }
    let filtered = apply_filter(spec, g, x)?;
    train_with_operator(config, Propagator::Identity, &filtered, labels, labeled)
}
