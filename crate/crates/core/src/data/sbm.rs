use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

/// Stochastic block model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub n: usize,
    /// Number of blocks; must divide `n`.
    pub k: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Must be at least `k` so every block has its own signature column.
    pub feature_dim: usize,
    /// Amplitude of the uniform feature noise.
    pub noise: f64,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.k == 0 || !self.n.is_multiple_of(self.k) {
            return fail(format!("sbm: k={} must be positive and divide n={}", self.k, self.n));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return fail(format!(
                "sbm: need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            ));
        }
        if self.feature_dim < self.k {
            return fail(format!(
                "sbm: feature_dim={} is smaller than k={}",
                self.feature_dim, self.k
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail(format!("sbm: noise must be >= 0, got {}", self.noise));
        }
        Ok(())
    }

    pub fn block_size(&self) -> usize {
        self.n / self.k
    }
}

/// Samples a planted-partition graph. Node `i` belongs to block
/// `i / (n / k)`; its features are the indicator of `j % k == block`
/// plus independent noise drawn from `[-noise, noise]`.
pub fn sbm_generate(params: &SbmParams) -> Result<Dataset> {
    params.validate()?;
    let SbmParams {
        n,
        k,
        p_in,
        p_out,
        feature_dim,
        noise,
        seed,
    } = *params;
    let size = params.block_size();
    let labels: Vec<usize> = (0..n).map(|i| i / size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let mut features = DenseMatrix::zeros(n, feature_dim);
    for i in 0..n {
        for (j, v) in features.row_mut(i).iter_mut().enumerate() {
            let signature = if j % k == labels[i] { 1.0 } else { 0.0 };
            let jitter = if noise > 0.0 {
                noise * (2.0 * rng.random::<f64>() - 1.0)
            } else {
                0.0
            };
            *v = signature + jitter;
        }
    }

    Ok(Dataset {
        name: "sbm".into(),
        graph: Graph::build(n, &edges)?,
        features,
        labels,
        class_names: (0..k).map(|b| format!("block{b}")).collect(),
        skipped_edges: 0,
    })
}
