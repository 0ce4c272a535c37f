//! Low-pass graph filters.
//!
//! Two filters smooth a signal `X` (one column per channel) over the graph:
//!
//! * renormalization (RNM): `Â^k X`, applied as `k` sparse products;
//! * auto-regressive (AR): `(I + αL)^{-1} X`, applied with a conjugate
//!   gradient solve.
//!
//! The same operators double as GCN propagation operators, see [`Propagator`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{conjugate_gradient_solve, CgOptions, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    None,
    Rnm,
    Ar,
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::None => "none",
            FilterKind::Rnm => "rnm",
            FilterKind::Ar => "ar",
        })
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(FilterKind::None),
            "rnm" => Ok(FilterKind::Rnm),
            "ar" => Ok(FilterKind::Ar),
            other => Err(Error::Config(format!(
                "unknown filter `{other}` (expected none|rnm|ar)"
            ))),
        }
    }
}

/// Which filter to apply, and how strongly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// RNM exponent.
    pub k: usize,
    /// AR strength.
    pub alpha: f64,
    /// Use `I − D^{-1/2} A D^{-1/2}` instead of `D − A` for AR.
    pub normalized_laplacian: bool,
}

impl FilterSpec {
    pub const NONE: FilterSpec = FilterSpec {
        kind: FilterKind::None,
        k: 1,
        alpha: 1.0,
        normalized_laplacian: false,
    };

    pub fn rnm(k: usize) -> Self {
        FilterSpec {
            kind: FilterKind::Rnm,
            k,
            ..Self::NONE
        }
    }

    pub fn ar(alpha: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Ar,
            alpha,
            ..Self::NONE
        }
    }

    /// Default strength for a label budget: stronger smoothing when labels
    /// are scarcer (at most two per class).
    pub fn for_budget(kind: FilterKind, labels_per_class: usize) -> Self {
        FilterSpec {
            kind,
            k: default_rnm_k(labels_per_class),
            alpha: default_ar_alpha(labels_per_class),
            normalized_laplacian: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FilterKind::Rnm if self.k == 0 => Err(Error::Config("RNM filter needs k >= 1".into())),
            FilterKind::Ar if !(self.alpha > 0.0 && self.alpha.is_finite()) => {
                Err(Error::Config(format!("AR filter needs alpha > 0, got {}", self.alpha)))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn default_rnm_k(labels_per_class: usize) -> usize {
    if labels_per_class <= 2 {
        4
    } else {
        2
    }
}

pub(crate) fn default_ar_alpha(labels_per_class: usize) -> f64 {
    if labels_per_class <= 2 {
        4.0
    } else {
        2.0
    }
}

/// `Â^k X`, as `k` successive sparse products.
pub fn rnm_filter(a_hat: &SparseMatrix, x: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if a_hat.rows() != a_hat.cols() {
        return Err(Error::dims("rnm_filter", a_hat.shape(), x.shape()));
    }
    if k == 0 {
        return Err(Error::Config("RNM filter needs k >= 1".into()));
    }
    let mut out = a_hat.spmm(x)?;
    for _ in 1..k {
        out = a_hat.spmm(&out)?;
    }
    Ok(out)
}

/// `(I + αL)^{-1} X` by conjugate gradients at relative tolerance 1e-8.
pub fn ar_filter(laplacian: &SparseMatrix, x: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    ar_filter_with(laplacian, x, alpha, CgOptions::default())
}

pub fn ar_filter_with(laplacian: &SparseMatrix, x: &DenseMatrix, alpha: f64, opts: CgOptions) -> Result<DenseMatrix> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::Config(format!("AR filter needs alpha > 0, got {alpha}")));
    }
    let system = regularized_system(laplacian, alpha)?;
    conjugate_gradient_solve(&system, x, opts)
}

/// `I + αL`.
pub(crate) fn regularized_system(laplacian: &SparseMatrix, alpha: f64) -> Result<SparseMatrix> {
    if laplacian.rows() != laplacian.cols() {
        return Err(Error::dims("I + αL", laplacian.shape(), laplacian.shape()));
    }
    SparseMatrix::identity(laplacian.rows()).add_scaled(laplacian, alpha)
}

fn spec_laplacian(spec: &FilterSpec, g: &Graph) -> SparseMatrix {
    if spec.normalized_laplacian {
        g.normalized_laplacian()
    } else {
        g.laplacian()
    }
}

/// Filters node features over the graph according to `spec`.
pub fn apply_filter(spec: &FilterSpec, g: &Graph, x: &DenseMatrix) -> Result<DenseMatrix> {
    spec.validate()?;
    match spec.kind {
        FilterKind::None => Ok(x.clone()),
        FilterKind::Rnm => rnm_filter(&g.renormalized_adjacency(), x, spec.k),
        FilterKind::Ar => ar_filter(&spec_laplacian(spec, g), x, spec.alpha),
    }
}

/// A symmetric linear operator used to propagate signals in a GCN layer.
#[derive(Debug, Clone)]
pub enum Propagator {
    /// No propagation; turns the GCN into a two-layer perceptron.
    Identity,
    /// `M^k X` for a sparse `M` (plain GCN uses `Â` with `k = 1`).
    Power { matrix: SparseMatrix, k: usize },
    /// `(I + αL)^{-1} X`, with `system = I + αL` prebuilt.
    AutoRegressive { system: SparseMatrix, opts: CgOptions },
}

impl Propagator {
    /// `Â` of the graph.
    pub fn gcn(g: &Graph) -> Self {
        Propagator::Power {
            matrix: g.renormalized_adjacency(),
            k: 1,
        }
    }

    /// The propagation operator of an IGCN built on `spec`.
    pub fn from_filter(spec: &FilterSpec, g: &Graph) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            FilterKind::None => Propagator::gcn(g),
            FilterKind::Rnm => Propagator::Power {
                matrix: g.renormalized_adjacency(),
                k: spec.k,
            },
            FilterKind::Ar => Propagator::AutoRegressive {
                system: regularized_system(&spec_laplacian(spec, g), spec.alpha)?,
                opts: CgOptions::default(),
            },
        })
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Propagator::Identity => Ok(x.clone()),
            Propagator::Power { matrix, k } => rnm_filter(matrix, x, *k),
            Propagator::AutoRegressive { system, opts } => conjugate_gradient_solve(system, x, *opts),
        }
    }

    /// Node count the operator acts on, if it has a fixed size.
    pub fn size(&self) -> Option<usize> {
        match self {
            Propagator::Identity => None,
            Propagator::Power { matrix, .. } => Some(matrix.rows()),
            Propagator::AutoRegressive { system, .. } => Some(system.rows()),
        }
    }
}
