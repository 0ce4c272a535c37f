//! Prototype metric head.
//!
//! Each class is represented by the mean embedding of its labeled nodes
//! (its prototype, or centroid). A node's class distribution is the softmax
//! of its similarities to every prototype, and the metric loss is the
//! cross-entropy of that distribution over the labeled nodes.
//!
//! Centroids are functions of the labeled embeddings, so
//! [`metric_backward`] differentiates through them: a labeled node receives
//! gradient both as a query and as a member of its class centroid.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{argmax, dot, log_sum_exp, softmax_in_place, DenseMatrix};

/// Norm guard for cosine similarity.
pub const COSINE_EPS: f64 = 1e-12;

/// Probability floor applied before taking logs.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimilarityKind {
    /// Cosine similarity.
    Cos,
    /// Negative L1 distance.
    L1,
    /// Negative squared Euclidean distance.
    L2,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 3] = [SimilarityKind::Cos, SimilarityKind::L1, SimilarityKind::L2];

    /// Tuned weight of the metric loss for this similarity.
    pub fn default_lambda(self) -> f64 {
        match self {
            SimilarityKind::Cos => 0.01,
            SimilarityKind::L1 => 0.05,
            SimilarityKind::L2 => 0.001,
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::Cos => "cos",
            SimilarityKind::L1 => "l1",
            SimilarityKind::L2 => "l2",
        })
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cos" => Ok(SimilarityKind::Cos),
            "l1" => Ok(SimilarityKind::L1),
            "l2" => Ok(SimilarityKind::L2),
            other => Err(Error::Config(format!("unknown metric `{other}` (expected cos|l1|l2)"))),
        }
    }
}

/// Per-class centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    centroids: DenseMatrix,
    counts: Vec<usize>,
}

impl Prototypes {
    /// `K × d`, one centroid per row.
    pub fn centroids(&self) -> &DenseMatrix {
        &self.centroids
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }
}

/// Mean embedding of the labeled nodes of each class.
pub fn class_centroids(z: &DenseMatrix, labels: &[usize], labeled: &[usize], classes: usize) -> Result<Prototypes> {
    let mut centroids = DenseMatrix::zeros(classes, z.cols());
    let mut counts = vec![0usize; classes];
    for &i in labeled {
        let class = labels[i];
        if class >= classes {
            return Err(Error::InvalidInput(format!(
                "label {class} of node {i} is outside 0..{classes}"
            )));
        }
        counts[class] += 1;
        for (c, v) in centroids.row_mut(class).iter_mut().zip(z.row(i)) {
            *c += v;
        }
    }
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::EmptyClass { class });
        }
        for c in centroids.row_mut(class) {
            *c /= count as f64;
        }
    }
    Ok(Prototypes { centroids, counts })
}

pub fn similarity(a: &[f64], b: &[f64], kind: SimilarityKind) -> f64 {
    match kind {
        SimilarityKind::Cos => {
            let na = norm(a).max(COSINE_EPS);
            let nb = norm(b).max(COSINE_EPS);
            dot(a, b) / (na * nb)
        }
        SimilarityKind::L1 => -a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
        SimilarityKind::L2 => -a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(),
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Adds `weight · ∂sim(a, b)/∂a` into `grad_a` and `weight · ∂sim(a, b)/∂b`
/// into `grad_b`, using `sim_value` for the cosine quotient rule.
fn accumulate_similarity_grad(
    a: &[f64],
    b: &[f64],
    kind: SimilarityKind,
    sim_value: f64,
    weight: f64,
    grad_a: &mut [f64],
    grad_b: Option<&mut [f64]>,
) {
    match kind {
        SimilarityKind::L2 => {
            for (g, (x, y)) in grad_a.iter_mut().zip(a.iter().zip(b)) {
                *g -= weight * 2.0 * (x - y);
            }
            if let Some(gb) = grad_b {
                for (g, (x, y)) in gb.iter_mut().zip(a.iter().zip(b)) {
                    *g += weight * 2.0 * (x - y);
                }
            }
        }
        SimilarityKind::L1 => {
            for (g, (x, y)) in grad_a.iter_mut().zip(a.iter().zip(b)) {
                *g -= weight * sign(x - y);
            }
            if let Some(gb) = grad_b {
                for (g, (x, y)) in gb.iter_mut().zip(a.iter().zip(b)) {
                    *g += weight * sign(x - y);
                }
            }
        }
        SimilarityKind::Cos => {
            let (ra, rb) = (norm(a), norm(b));
            let na = ra.max(COSINE_EPS);
            let nb = rb.max(COSINE_EPS);
            // ∂/∂a [a·b / (na nb)] = b/(na nb) − sim · a / (na · ‖a‖), the
            // second term only while the guard is inactive.
            let a_radial = if ra > COSINE_EPS { sim_value / (na * ra) } else { 0.0 };
            for (g, (x, y)) in grad_a.iter_mut().zip(a.iter().zip(b)) {
                *g += weight * (y / (na * nb) - a_radial * x);
            }
            if let Some(gb) = grad_b {
                let b_radial = if rb > COSINE_EPS { sim_value / (nb * rb) } else { 0.0 };
                for (g, (x, y)) in gb.iter_mut().zip(a.iter().zip(b)) {
                    *g += weight * (x / (na * nb) - b_radial * y);
                }
            }
        }
    }
}

fn similarity_row(z: &[f64], protos: &Prototypes, kind: SimilarityKind) -> Vec<f64> {
    (0..protos.classes())
        .map(|k| similarity(z, protos.centroids.row(k), kind))
        .collect()
}

/// Softmax over similarities to every prototype, one row per node.
pub fn prototype_probs(z: &DenseMatrix, protos: &Prototypes, kind: SimilarityKind) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(z.rows(), protos.classes());
    for i in 0..z.rows() {
        let row = out.row_mut(i);
        row.copy_from_slice(&similarity_row(z.row(i), protos, kind));
        softmax_in_place(row);
    }
    out
}

/// Metric loss with centroids recomputed from `z`.
pub fn metric_loss(
    z: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
    classes: usize,
    kind: SimilarityKind,
) -> Result<f64> {
    let protos = class_centroids(z, labels, labeled, classes)?;
    metric_loss_with(z, labels, labeled, &protos, kind)
}

/// `−Σ_{labeled} ln p(true class)` against fixed prototypes.
pub fn metric_loss_with(
    z: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
    protos: &Prototypes,
    kind: SimilarityKind,
) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::InvalidInput(
            "metric loss needs at least one labeled node".into(),
        ));
    }
    let max_term = -PROB_FLOOR.ln();
    Ok(labeled
        .iter()
        .map(|&i| {
            let sims = similarity_row(z.row(i), protos, kind);
            let term = log_sum_exp(&sims) - sims[labels[i]];
            if term > max_term {
                max_term
            } else {
                term
            }
        })
        .sum())
}

/// Gradient of [`metric_loss`] with respect to every row of `z`.
///
/// With `stop_gradient_centroids` the centroids are treated as constants.
pub fn metric_backward(
    z: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
    classes: usize,
    kind: SimilarityKind,
    stop_gradient_centroids: bool,
) -> Result<DenseMatrix> {
    if labeled.is_empty() {
        return Err(Error::InvalidInput(
            "metric loss needs at least one labeled node".into(),
        ));
    }
    let protos = class_centroids(z, labels, labeled, classes)?;
    let d = z.cols();
    let mut grad = DenseMatrix::zeros(z.rows(), d);
    let mut grad_centroids = DenseMatrix::zeros(classes, d);

    // The probability floor only guards the loss value; the gradient is
    // that of the unclamped log-softmax, as for the cross-entropy term.
    for &i in labeled {
        let sims = similarity_row(z.row(i), &protos, kind);
        let lse = log_sum_exp(&sims);
        for k in 0..classes {
            let upstream = (sims[k] - lse).exp() - if k == labels[i] { 1.0 } else { 0.0 };
            if upstream == 0.0 {
                continue;
            }
            let centroid = protos.centroids.row(k);
            let grad_c = (!stop_gradient_centroids).then(|| grad_centroids.row_mut(k));
            accumulate_similarity_grad(z.row(i), centroid, kind, sims[k], upstream, grad.row_mut(i), grad_c);
        }
    }

    if !stop_gradient_centroids {
        for &j in labeled {
            let class = labels[j];
            let share = 1.0 / protos.counts[class] as f64;
            let gc = grad_centroids.row(class).to_vec();
            for (g, c) in grad.row_mut(j).iter_mut().zip(gc) {
                *g += share * c;
            }
        }
    }
    Ok(grad)
}

/// `ce + λ · me`.
pub fn combined_loss(ce: f64, me: f64, lambda: f64) -> f64 {
    ce + lambda * me
}

/// Most similar prototype per node, ties to the lowest class index.
pub fn shoestring_predict(z: &DenseMatrix, protos: &Prototypes, kind: SimilarityKind) -> Vec<usize> {
    (0..z.rows())
        .map(|i| argmax(&similarity_row(z.row(i), protos, kind)))
        .collect()
}
