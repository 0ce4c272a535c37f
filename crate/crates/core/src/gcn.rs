//! Two-layer graph convolutional network with analytic gradients.
//!
//! The forward pass is
//!
//! ```text
//! H₀ = op·X·W₀      H = ReLU(H₀)      H_d = dropout(H)
//! Z  = op·H_d·W₁    P = softmax(Z)
//! ```
//!
//! where `op` is any symmetric [`Propagator`]. With `op = I` the network is a
//! plain two-layer perceptron, which is how feature-filtering pipelines reuse
//! it.
//!
//! `op·X` never changes during training, so the `*_propagated` entry points
//! take it precomputed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::Propagator;
use crate::linalg::{relu, row_softmax, DenseMatrix};

/// Which representation the metric head reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EmbeddingLayer {
    /// Hidden activations `H_d` (width `h`).
    Hidden,
    /// Pre-softmax logits `Z` (width `K`).
    #[default]
    Final,
}

impl std::fmt::Display for EmbeddingLayer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbeddingLayer::Hidden => "hidden",
            EmbeddingLayer::Final => "final",
        })
    }
}

impl std::str::FromStr for EmbeddingLayer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hidden" => Ok(EmbeddingLayer::Hidden),
            "final" => Ok(EmbeddingLayer::Final),
            other => Err(Error::Config(format!(
                "unknown embedding layer `{other}` (expected hidden|final)"
            ))),
        }
    }
}

/// The two weight matrices. `version` changes on every update so caches
/// computed from older weights can be detected.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub(crate) w0: DenseMatrix,
    pub(crate) w1: DenseMatrix,
    version: u64,
}

impl GcnParams {
    pub fn new(w0: DenseMatrix, w1: DenseMatrix) -> Result<Self> {
        if w0.cols() != w1.rows() {
            return Err(Error::dims("GcnParams", w0.shape(), w1.shape()));
        }
        Ok(Self { w0, w1, version: 0 })
    }

    /// Glorot-uniform initialization of an `input → hidden → classes` network.
    pub fn init(input: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        Self {
            w0: glorot_init(input, hidden, seed),
            w1: glorot_init(hidden, classes, seed.wrapping_add(0x9E37_79B9_7F4A_7C15)),
            version: 0,
        }
    }

    pub fn w0(&self) -> &DenseMatrix {
        &self.w0
    }

    pub fn w1(&self) -> &DenseMatrix {
        &self.w1
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0.cols()
    }

    pub fn classes(&self) -> usize {
        self.w1.cols()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Mutable access to both weights; bumps the version.
    pub(crate) fn weights_mut(&mut self) -> (&mut DenseMatrix, &mut DenseMatrix) {
        self.version += 1;
        (&mut self.w0, &mut self.w1)
    }
}

/// Intermediate tensors of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub pre_activation: DenseMatrix,
    pub hidden: DenseMatrix,
    /// Kept hidden units, row-major over `n × h`. All true outside training.
    pub dropout_mask: Vec<bool>,
    /// Factor applied to kept units, `1 / (1 − rate)`.
    pub dropout_scale: f64,
    pub hidden_dropped: DenseMatrix,
    pub logits: DenseMatrix,
    pub probs: DenseMatrix,
    params_version: u64,
}

impl ForwardCache {
    /// The representation the metric head reads for `layer`.
    pub fn embedding(&self, layer: EmbeddingLayer) -> &DenseMatrix {
        match layer {
            EmbeddingLayer::Hidden => &self.hidden_dropped,
            EmbeddingLayer::Final => &self.logits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

/// Uniform entries in `±sqrt(6 / (rows + cols))`, deterministic per seed.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| bound * (2.0 * rng.random::<f64>() - 1.0))
}

fn check_op(op: &Propagator, n: usize) -> Result<()> {
    match op.size() {
        Some(size) if size != n => Err(Error::dims("propagation", (size, size), (n, 0))),
        _ => Ok(()),
    }
}

pub fn gcn_forward<R: Rng + ?Sized>(
    op: &Propagator,
    x: &DenseMatrix,
    params: &GcnParams,
    dropout_rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<ForwardCache> {
    check_op(op, x.rows())?;
    let ax = op.apply(x)?;
    forward_propagated(op, &ax, params, dropout_rate, training, rng)
}

/// Forward pass given `op·X` already computed.
pub fn forward_propagated<R: Rng + ?Sized>(
    op: &Propagator,
    ax: &DenseMatrix,
    params: &GcnParams,
    dropout_rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<ForwardCache> {
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::Config(format!("dropout must be in [0, 1), got {dropout_rate}")));
    }
    check_op(op, ax.rows())?;
    let pre_activation = ax.matmul(&params.w0)?;
    let hidden = relu(&pre_activation);

    let use_dropout = training && dropout_rate > 0.0;
    let (dropout_mask, dropout_scale) = if use_dropout {
        let mask: Vec<bool> = (0..hidden.as_slice().len())
            .map(|_| rng.random::<f64>() >= dropout_rate)
            .collect();
        (mask, 1.0 / (1.0 - dropout_rate))
    } else {
        (vec![true; hidden.as_slice().len()], 1.0)
    };
    let hidden_dropped = if use_dropout {
        let mut hd = hidden.clone();
        for (v, &keep) in hd.as_mut_slice().iter_mut().zip(&dropout_mask) {
            *v = if keep { *v * dropout_scale } else { 0.0 };
        }
        hd
    } else {
        hidden.clone()
    };

    let logits = op.apply(&hidden_dropped.matmul(&params.w1)?)?;
    let probs = row_softmax(&logits);
    Ok(ForwardCache {
        pre_activation,
        hidden,
        dropout_mask,
        dropout_scale,
        hidden_dropped,
        logits,
        probs,
        params_version: params.version,
    })
}

/// `−Σ_{i ∈ mask} ln P[i, label_i]`, with probabilities clamped at 1e-12.
pub fn ce_loss(probs: &DenseMatrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::InvalidInput(
            "cross-entropy needs at least one labeled node".into(),
        ));
    }
    let mut loss = 0.0;
    for &i in mask {
        let class = labels[i];
        if class >= probs.cols() {
            return Err(Error::InvalidInput(format!(
                "label {class} of node {i} is outside 0..{}",
                probs.cols()
            )));
        }
        // Written so that a NaN probability stays NaN.
        let p = probs.get(i, class);
        loss -= (if p < 1e-12 { 1e-12 } else { p }).ln();
    }
    Ok(loss)
}

/// `∂ ce_loss / ∂Z`: `P − Y` on labeled rows, zero elsewhere.
pub fn ce_grad(probs: &DenseMatrix, labels: &[usize], mask: &[usize]) -> DenseMatrix {
    let mut grad = DenseMatrix::zeros(probs.rows(), probs.cols());
    for &i in mask {
        grad.row_mut(i).copy_from_slice(probs.row(i));
        let v = grad.get(i, labels[i]);
        grad.set(i, labels[i], v - 1.0);
    }
    grad
}

pub fn gcn_backward(
    cache: &ForwardCache,
    op: &Propagator,
    x: &DenseMatrix,
    params: &GcnParams,
    d_logits: &DenseMatrix,
) -> Result<GradientSet> {
    let ax = op.apply(x)?;
    backward_propagated(cache, op, &ax, params, d_logits, None)
}

/// Backward pass given `op·X`. `d_hidden`, when present, is an extra
/// gradient arriving at `H_d` (a metric head reading the hidden layer).
pub fn backward_propagated(
    cache: &ForwardCache,
    op: &Propagator,
    ax: &DenseMatrix,
    params: &GcnParams,
    d_logits: &DenseMatrix,
    d_hidden: Option<&DenseMatrix>,
) -> Result<GradientSet> {
    if cache.params_version != params.version {
        return Err(Error::Internal(format!(
            "stale forward cache: computed with parameter version {}, current is {}",
            cache.params_version, params.version
        )));
    }
    if d_logits.shape() != cache.logits.shape() {
        return Err(Error::dims("gcn_backward", d_logits.shape(), cache.logits.shape()));
    }
    // op is symmetric, so opᵀ·dZ = op·dZ.
    let op_dz = op.apply(d_logits)?;
    let g_w1 = cache.hidden_dropped.t_matmul(&op_dz)?;

    let mut d_hd = op_dz.matmul_t(&params.w1)?;
    if let Some(extra) = d_hidden {
        d_hd.add_scaled(extra, 1.0)?;
    }
    let scale = cache.dropout_scale;
    for ((g, &keep), &pre) in d_hd
        .as_mut_slice()
        .iter_mut()
        .zip(&cache.dropout_mask)
        .zip(cache.pre_activation.as_slice())
    {
        *g = if keep && pre > 0.0 { *g * scale } else { 0.0 };
    }
    let g_w0 = ax.t_matmul(&d_hd)?;
    Ok(GradientSet { w0: g_w0, w1: g_w1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn ring(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).chain([(0, n / 2)]).collect();
        Graph::build(n, &edges).unwrap()
    }

    #[test]
    fn glorot_is_seeded_and_bounded() {
        let a = glorot_init(30, 20, 5);
        assert_eq!(a, glorot_init(30, 20, 5));
        assert_ne!(a, glorot_init(30, 20, 6));
        let bound = (6.0f64 / 50.0).sqrt();
        assert!(a.as_slice().iter().all(|v| v.abs() <= bound));

        let big = glorot_init(100, 100, 9);
        let mean = big.as_slice().iter().sum::<f64>() / 1e4;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let g = ring(5);
        let x = random(5, 3, &mut rng());
        let params = GcnParams::new(DenseMatrix::zeros(3, 4), DenseMatrix::zeros(4, 3)).unwrap();
        let cache = gcn_forward(&Propagator::gcn(&g), &x, &params, 0.0, false, &mut rng()).unwrap();
        assert_eq!(cache.logits, DenseMatrix::zeros(5, 3));
        assert!(cache.probs.as_slice().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn linear_collapse_with_identity_operator() {
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [0.5, 3.0]]).unwrap();
        let w0 = DenseMatrix::from_rows(&[[1.0, 0.5], [0.25, 1.0]]).unwrap();
        let w1 = DenseMatrix::from_rows(&[[2.0, -1.0], [1.0, 0.5]]).unwrap();
        let params = GcnParams::new(w0.clone(), w1.clone()).unwrap();
        let cache = gcn_forward(&Propagator::Identity, &x, &params, 0.0, true, &mut rng()).unwrap();
        let expected = x.matmul(&w0).unwrap().matmul(&w1).unwrap();
        assert_eq!(cache.logits, expected);

        // g_w0 = Xᵀ·dZ·W₁ᵀ when nothing is clipped.
        let dz = DenseMatrix::from_rows(&[[0.3, -0.3], [-0.2, 0.2]]).unwrap();
        let grads = gcn_backward(&cache, &Propagator::Identity, &x, &params, &dz).unwrap();
        let expected_w0 = x.t_matmul(&dz).unwrap().matmul_t(&w1).unwrap();
        assert!(grads.w0.max_abs_diff(&expected_w0) < 1e-15);
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let mut r = rng();
        let g = ring(6);
        let x = random(6, 4, &mut r);
        let params = GcnParams::new(random(4, 3, &mut r), random(3, 2, &mut r)).unwrap();
        let cache = gcn_forward(&Propagator::gcn(&g), &x, &params, 0.0, false, &mut r).unwrap();

        // Independent evaluation with explicit loops over the dense Â.
        let a = g.renormalized_adjacency().to_dense();
        let n = 6;
        let mut ax = vec![vec![0.0; 4]; n];
        for i in 0..n {
            for j in 0..n {
                for f in 0..4 {
                    ax[i][f] += a.get(i, j) * x.get(j, f);
                }
            }
        }
        let mut h = vec![vec![0.0; 3]; n];
        for i in 0..n {
            for u in 0..3 {
                let s: f64 = (0..4).map(|f| ax[i][f] * params.w0.get(f, u)).sum();
                h[i][u] = if s > 0.0 { s } else { 0.0 };
            }
        }
        let mut hw = vec![vec![0.0; 2]; n];
        for i in 0..n {
            for c in 0..2 {
                hw[i][c] = (0..3).map(|u| h[i][u] * params.w1.get(u, c)).sum();
            }
        }
        for i in 0..n {
            let z: Vec<f64> = (0..2).map(|c| (0..n).map(|j| a.get(i, j) * hw[j][c]).sum()).collect();
            let denom: f64 = z.iter().map(|v| v.exp()).sum();
            for c in 0..2 {
                assert!((cache.probs.get(i, c) - z[c].exp() / denom).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dropout_masks_and_rescales() {
        let mut r = rng();
        let x = random(20, 5, &mut r);
        let params = GcnParams::init(5, 8, 3, 1);
        let cache = gcn_forward(&Propagator::Identity, &x, &params, 0.5, true, &mut r).unwrap();
        assert!(cache.dropout_mask.iter().any(|k| !k));
        assert_eq!(cache.dropout_scale, 2.0);
        for (idx, &keep) in cache.dropout_mask.iter().enumerate() {
            let h = cache.hidden.as_slice()[idx];
            let hd = cache.hidden_dropped.as_slice()[idx];
            assert_eq!(hd, if keep { 2.0 * h } else { 0.0 });
        }
        let eval = gcn_forward(&Propagator::Identity, &x, &params, 0.5, false, &mut r).unwrap();
        assert!(eval.dropout_mask.iter().all(|&k| k));
        assert_eq!(eval.hidden, eval.hidden_dropped);
        assert!(gcn_forward(&Propagator::Identity, &x, &params, 1.0, true, &mut r).is_err());
    }

    #[test]
    fn ce_loss_examples() {
        let perfect = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(ce_loss(&perfect, &[1, 0], &[0, 1]).unwrap(), 0.0);

        let uniform = DenseMatrix::from_rows(&[[0.25; 4]]).unwrap();
        assert!((ce_loss(&uniform, &[2], &[0]).unwrap() - 1.386_294_361_119_890_6).abs() < 1e-12);

        let p =
            DenseMatrix::from_rows(&[[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4], [0.9, 0.05, 0.05]]).unwrap();
        let expected = -(0.7f64.ln() + 0.3f64.ln() + 0.4f64.ln());
        assert!((ce_loss(&p, &[0, 2, 2, 1], &[0, 1, 2]).unwrap() - expected).abs() < 1e-12);

        assert!(ce_loss(&p, &[0, 2, 2, 1], &[]).is_err());
        let zero = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!((ce_loss(&zero, &[1], &[0]).unwrap() - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let mut r = rng();
        let g = ring(6);
        let x = random(6, 4, &mut r);
        let params = GcnParams::init(4, 3, 2, 3);
        let op = Propagator::gcn(&g);
        let cache = gcn_forward(&op, &x, &params, 0.0, true, &mut r).unwrap();
        let grads = gcn_backward(&cache, &op, &x, &params, &DenseMatrix::zeros(6, 2)).unwrap();
        assert_eq!(grads.w0, DenseMatrix::zeros(4, 3));
        assert_eq!(grads.w1, DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut r = rng();
        let x = random(4, 3, &mut r);
        let mut params = GcnParams::init(3, 2, 2, 3);
        let cache = gcn_forward(&Propagator::Identity, &x, &params, 0.0, true, &mut r).unwrap();
        params.weights_mut();
        let err = gcn_backward(&cache, &Propagator::Identity, &x, &params, &DenseMatrix::zeros(4, 2));
        assert!(matches!(err, Err(Error::Internal(_))));
    }

    /// Central differences of the CE loss with the dropout mask frozen by
    /// reseeding the generator before every forward pass.
    #[test]
    fn backward_matches_finite_differences_with_frozen_dropout() {
        let mut r = rng();
        let g = ring(8);
        let x = random(8, 4, &mut r);
        let labels = [0, 1, 2, 0, 1, 2, 0, 1];
        let mask = [0, 1, 2, 5];
        let op = Propagator::gcn(&g);
        let params = GcnParams::init(4, 5, 3, 21);
        let loss_at = |p: &GcnParams| {
            let mut fixed = ChaCha8Rng::seed_from_u64(99);
            let c = gcn_forward(&op, &x, p, 0.3, true, &mut fixed).unwrap();
            ce_loss(&c.probs, &labels, &mask).unwrap()
        };
        let mut fixed = ChaCha8Rng::seed_from_u64(99);
        let cache = gcn_forward(&op, &x, &params, 0.3, true, &mut fixed).unwrap();
        let d_logits = ce_grad(&cache.probs, &labels, &mask);
        let grads = gcn_backward(&cache, &op, &x, &params, &d_logits).unwrap();

        let h = 1e-5;
        for which in 0..2 {
            let (rows, cols) = if which == 0 {
                params.w0.shape()
            } else {
                params.w1.shape()
            };
            for i in 0..rows {
                for j in 0..cols {
                    let shifted = |delta: f64| {
                        let mut p = params.clone();
                        let w = if which == 0 { &mut p.w0 } else { &mut p.w1 };
                        w.set(i, j, w.get(i, j) + delta);
                        loss_at(&p)
                    };
                    let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                    let analytic = if which == 0 {
                        grads.w0.get(i, j)
                    } else {
                        grads.w1.get(i, j)
                    };
                    let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
                    assert!(rel < 1e-4, "w{which}[{i},{j}]: analytic {analytic} fd {fd}");
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut r = rng();
        let n = 7;
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 3)];
        let g = Graph::build(n, &edges).unwrap();
        let x = random(n, 3, &mut r);
        let params = GcnParams::init(3, 4, 2, 8);
        let perm = [3, 0, 6, 1, 5, 2, 4]; // new index i holds old node perm[i]
        let mut inverse = [0; 7];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let g2 = Graph::build(n, &edges.map(|(a, b)| (inverse[a], inverse[b]))).unwrap();
        let x2 = x.select_rows(&perm);
        let p1 = gcn_forward(&Propagator::gcn(&g), &x, &params, 0.0, false, &mut r)
            .unwrap()
            .probs;
        let p2 = gcn_forward(&Propagator::gcn(&g2), &x2, &params, 0.0, false, &mut r)
            .unwrap()
            .probs;
        assert!(p1.select_rows(&perm).max_abs_diff(&p2) < 1e-12);
    }

    #[test]
    fn inference_is_deterministic() {
        let mut r = rng();
        let g = ring(9);
        let x = random(9, 3, &mut r);
        let params = GcnParams::init(3, 4, 2, 8);
        let a = gcn_forward(&Propagator::gcn(&g), &x, &params, 0.5, false, &mut r).unwrap();
        let b = gcn_forward(&Propagator::gcn(&g), &x, &params, 0.5, false, &mut r).unwrap();
        assert_eq!(a.probs, b.probs);
    }
}
