//! Full-graph training of the baseline and metric-head models.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{apply_filter, FilterKind, FilterSpec, Propagator};
use crate::gcn::{
    backward_propagated, ce_grad, ce_loss, forward_propagated, EmbeddingLayer, ForwardCache, GcnParams, GradientSet,
};
use crate::graph::Graph;
use crate::labelprop::{lp_predict, lp_solve_with, LabelMatrix};
use crate::linalg::DenseMatrix;
use crate::metric_head::{class_centroids, metric_backward, metric_loss, shoestring_predict, SimilarityKind};

/// Backbone model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gcn,
    IgcnRnm,
    IgcnAr,
    Lp,
    GlpRnm,
    GlpAr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gcn,
        Method::IgcnRnm,
        Method::IgcnAr,
        Method::Lp,
        Method::GlpRnm,
        Method::GlpAr,
    ];

    /// The graph filter this method is built on.
    pub fn filter_kind(self) -> FilterKind {
        match self {
            Method::Gcn | Method::Lp => FilterKind::None,
            Method::IgcnRnm | Method::GlpRnm => FilterKind::Rnm,
            Method::IgcnAr | Method::GlpAr => FilterKind::Ar,
        }
    }

    /// The member of the same family (GCN or label propagation) that uses `kind`.
    pub fn with_filter(self, kind: FilterKind) -> Method {
        let propagation = matches!(self, Method::Lp | Method::GlpRnm | Method::GlpAr);
        match (propagation, kind) {
            (false, FilterKind::None) => Method::Gcn,
            (false, FilterKind::Rnm) => Method::IgcnRnm,
            (false, FilterKind::Ar) => Method::IgcnAr,
            (true, FilterKind::None) => Method::Lp,
            (true, FilterKind::Rnm) => Method::GlpRnm,
            (true, FilterKind::Ar) => Method::GlpAr,
        }
    }

    /// Whether the method has trainable weights.
    pub fn is_parametric(self) -> bool {
        self != Method::Lp
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gcn => "gcn",
            Method::IgcnRnm => "igcn_rnm",
            Method::IgcnAr => "igcn_ar",
            Method::Lp => "lp",
            Method::GlpRnm => "glp_rnm",
            Method::GlpAr => "glp_ar",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL.into_iter().find(|m| m.to_string() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown method `{s}` (expected gcn|igcn_rnm|igcn_ar|lp|glp_rnm|glp_ar)"
            ))
        })
    }
}

/// Settings of a single training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    /// Add the metric head loss and classify with prototypes.
    pub shoestring: bool,
    pub metric: SimilarityKind,
    /// Weight of the metric loss.
    pub lambda: f64,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    /// Apply weight decay to the output layer as well as the first layer.
    pub decay_all_weights: bool,
    pub epochs: usize,
    pub hidden: usize,
    pub filter_k: usize,
    pub filter_alpha: f64,
    pub lp_alpha: f64,
    pub normalized_laplacian: bool,
    pub embedding_layer: EmbeddingLayer,
    pub stop_gradient_centroids: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Gcn,
            shoestring: false,
            metric: SimilarityKind::Cos,
            lambda: SimilarityKind::Cos.default_lambda(),
            lr: 0.01,
            dropout: 0.5,
            weight_decay: 5e-4,
            decay_all_weights: false,
            epochs: 200,
            hidden: 16,
            filter_k: crate::filters::default_rnm_k(1),
            filter_alpha: crate::filters::default_ar_alpha(1),
            lp_alpha: 1.0,
            normalized_laplacian: false,
            embedding_layer: EmbeddingLayer::Final,
            stop_gradient_centroids: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("lr must be > 0, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.epochs == 0 {
            return fail("epochs must be >= 1".into());
        }
        if self.hidden == 0 {
            return fail("hidden must be >= 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if !(self.lp_alpha > 0.0 && self.lp_alpha.is_finite()) {
            return fail(format!("lp_alpha must be > 0, got {}", self.lp_alpha));
        }
        self.filter_spec().validate()
    }

    /// The filter implied by `method`, `filter_k` and `filter_alpha`.
    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            kind: self.method.filter_kind(),
            k: self.filter_k,
            alpha: self.filter_alpha,
            normalized_laplacian: self.normalized_laplacian,
        }
    }

    fn dropout_seed(&self) -> u64 {
        self.seed ^ 0xD1B5_4A32_D192_ED03
    }
}

/// Adam moments for the two weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: [DenseMatrix; 2],
    second: [DenseMatrix; 2],
    step: u64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(params: &GcnParams) -> Self {
        let zeros = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self {
            first: [zeros(params.w0()), zeros(params.w1())],
            second: [zeros(params.w0()), zeros(params.w1())],
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut GcnParams, grads: &GradientSet, lr: f64) -> Result<()> {
        if grads.w0.shape() != params.w0().shape() || grads.w1.shape() != params.w1().shape() {
            return Err(Error::dims("adam", grads.w0.shape(), params.w0().shape()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - Self::BETA1.powi(t);
        let bias2 = 1.0 - Self::BETA2.powi(t);
        let (w0, w1) = params.weights_mut();
        for (idx, (w, g)) in [(w0, &grads.w0), (w1, &grads.w1)].into_iter().enumerate() {
            let m = self.first[idx].as_mut_slice();
            let v = self.second[idx].as_mut_slice();
            for (((w, &g), m), v) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *w -= lr * m_hat / (v_hat.sqrt() + Self::EPSILON);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Backbone {
    /// Two-layer network with its optimizer state.
    Network { params: GcnParams, optimizer: AdamState },
    /// Label propagation scores; nothing is trained.
    Propagation { scores: DenseMatrix },
}

/// A trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: TrainConfig,
    pub classes: usize,
    pub backbone: Backbone,
    /// Training objective at every epoch, before that epoch's update.
    pub loss_history: Vec<f64>,
}

impl ModelState {
    pub fn params(&self) -> Option<&GcnParams> {
        match &self.backbone {
            Backbone::Network { params, .. } => Some(params),
            Backbone::Propagation { .. } => None,
        }
    }

    pub fn optimizer(&self) -> Option<&AdamState> {
        match &self.backbone {
            Backbone::Network { optimizer, .. } => Some(optimizer),
            Backbone::Propagation { .. } => None,
        }
    }
}

/// Number of classes implied by a label vector.
pub fn class_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

fn require_every_class(labels: &[usize], labeled: &[usize], classes: usize) -> Result<()> {
    let mut seen = vec![false; classes];
    for &i in labeled {
        seen[labels[i]] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(class) => Err(Error::Config(format!(
            "class {class} has no labeled node; the metric head needs one per class"
        ))),
        None => Ok(()),
    }
}

fn check_inputs(graph: &Graph, x: &DenseMatrix, labels: &[usize], labeled: &[usize]) -> Result<()> {
    let n = graph.node_count();
    if x.rows() != n || labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "graph has {n} nodes but features have {} rows and labels {} entries",
            x.rows(),
            labels.len()
        )));
    }
    if labeled.is_empty() {
        return Err(Error::InvalidInput("no labeled nodes".into()));
    }
    if let Some(&bad) = labeled.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidInput(format!("labeled node {bad} is outside 0..{n}")));
    }
    Ok(())
}

/// The propagation operator and the network input for a parametric method.
fn network_inputs(config: &TrainConfig, graph: &Graph, x: &DenseMatrix) -> Result<(Propagator, DenseMatrix)> {
    let spec = config.filter_spec();
    Ok(match config.method {
        Method::Gcn => (Propagator::gcn(graph), x.clone()),
        Method::IgcnRnm | Method::IgcnAr => (Propagator::from_filter(&spec, graph)?, x.clone()),
        Method::GlpRnm | Method::GlpAr => (Propagator::Identity, apply_filter(&spec, graph, x)?),
        Method::Lp => return Err(Error::Internal("label propagation has no network".into())),
    })
}

pub fn train(
    config: &TrainConfig,
    graph: &Graph,
    x: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
) -> Result<ModelState> {
    config.validate()?;
    check_inputs(graph, x, labels, labeled)?;
    let classes = class_count(labels);
    if config.shoestring {
        require_every_class(labels, labeled, classes)?;
    }
    match config.method {
        Method::Lp => {
            let y = LabelMatrix::new(graph.node_count(), classes, labels, labeled)?;
            let scores = lp_solve_with(&laplacian_for(config, graph), &y, config.lp_alpha)?;
            Ok(ModelState {
                config: config.clone(),
                classes,
                backbone: Backbone::Propagation { scores },
                loss_history: Vec::new(),
            })
        }
        Method::GlpRnm | Method::GlpAr => {
            crate::labelprop::glp_pipeline(graph, x, &config.filter_spec(), labels, labeled, config)
        }
        _ => {
            let (op, input) = network_inputs(config, graph, x)?;
            train_with_operator(config, op, &input, labels, labeled)
        }
    }
}

fn laplacian_for(config: &TrainConfig, graph: &Graph) -> crate::linalg::SparseMatrix {
    if config.normalized_laplacian {
        graph.normalized_laplacian()
    } else {
        graph.laplacian()
    }
}

/// Trains the two-layer network on `(op, input)`.
pub(crate) fn train_with_operator(
    config: &TrainConfig,
    op: Propagator,
    input: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
) -> Result<ModelState> {
    config.validate()?;
    let classes = class_count(labels);
    if config.shoestring {
        require_every_class(labels, labeled, classes)?;
    }
    let ax = op.apply(input)?;
    let mut params = GcnParams::init(input.cols(), config.hidden, classes, config.seed);
    let mut optimizer = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.dropout_seed());
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let cache = forward_propagated(&op, &ax, &params, config.dropout, true, &mut rng)?;
        let objective = assemble_objective(config, &cache, labels, labeled, classes)?;
        if !objective.loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: objective.loss,
            });
        }
        loss_history.push(objective.loss);
        let mut grads = backward_propagated(
            &cache,
            &op,
            &ax,
            &params,
            &objective.d_logits,
            objective.d_hidden.as_ref(),
        )?;
        if config.weight_decay > 0.0 {
            grads.w0.add_scaled(params.w0(), config.weight_decay)?;
            if config.decay_all_weights {
                grads.w1.add_scaled(params.w1(), config.weight_decay)?;
            }
        }
        optimizer.step(&mut params, &grads, config.lr)?;
    }

    Ok(ModelState {
        config: config.clone(),
        classes,
        backbone: Backbone::Network { params, optimizer },
        loss_history,
    })
}

/// Loss value and its gradients at the network outputs.
#[derive(Debug, Clone)]
pub struct Objective {
    pub loss: f64,
    pub d_logits: DenseMatrix,
    pub d_hidden: Option<DenseMatrix>,
}

/// Cross-entropy plus, under the metric head, `λ` times the metric loss on
/// the configured embedding layer.
pub fn assemble_objective(
    config: &TrainConfig,
    cache: &ForwardCache,
    labels: &[usize],
    labeled: &[usize],
    classes: usize,
) -> Result<Objective> {
    let ce = ce_loss(&cache.probs, labels, labeled)?;
    let mut d_logits = ce_grad(&cache.probs, labels, labeled);
    if !config.shoestring {
        return Ok(Objective {
            loss: ce,
            d_logits,
            d_hidden: None,
        });
    }
    let embedding = cache.embedding(config.embedding_layer);
    let me = metric_loss(embedding, labels, labeled, classes, config.metric)?;
    let d_embedding = metric_backward(
        embedding,
        labels,
        labeled,
        classes,
        config.metric,
        config.stop_gradient_centroids,
    )?;
    let loss = crate::metric_head::combined_loss(ce, me, config.lambda);
    let d_hidden = match config.embedding_layer {
        EmbeddingLayer::Final => {
            d_logits.add_scaled(&d_embedding, config.lambda)?;
            None
        }
        EmbeddingLayer::Hidden => Some(d_embedding.scale(config.lambda)),
    };
    Ok(Objective {
        loss,
        d_logits,
        d_hidden,
    })
}

/// Inference-time embedding of every node: the configured layer of the
/// network, or the propagation scores for label propagation.
pub fn embeddings(model: &ModelState, graph: &Graph, x: &DenseMatrix) -> Result<DenseMatrix> {
    match &model.backbone {
        Backbone::Propagation { scores } => Ok(scores.clone()),
        Backbone::Network { params, .. } => {
            let cache = inference(model, params, graph, x)?;
            Ok(cache.embedding(model.config.embedding_layer).clone())
        }
    }
}

fn inference(model: &ModelState, params: &GcnParams, graph: &Graph, x: &DenseMatrix) -> Result<ForwardCache> {
    let (op, input) = network_inputs(&model.config, graph, x)?;
    let ax = op.apply(&input)?;
    // The generator is unused without dropout.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    forward_propagated(&op, &ax, params, 0.0, false, &mut rng)
}

/// Predicted class of every node.
pub fn predict(
    model: &ModelState,
    graph: &Graph,
    x: &DenseMatrix,
    labels: &[usize],
    labeled: &[usize],
) -> Result<Vec<usize>> {
    let config = &model.config;
    let (embedding, baseline) = match &model.backbone {
        Backbone::Propagation { scores } => (scores.clone(), lp_predict(scores)),
        Backbone::Network { params, .. } => {
            let cache = inference(model, params, graph, x)?;
            let baseline = cache.probs.row_argmax();
            (cache.embedding(config.embedding_layer).clone(), baseline)
        }
    };
    if !config.shoestring {
        return Ok(baseline);
    }
    let protos = class_centroids(&embedding, labels, labeled, model.classes)?;
    Ok(shoestring_predict(&embedding, &protos, config.metric))
}

/// Fraction of `test` nodes whose prediction matches the truth.
pub fn evaluate(pred: &[usize], truth: &[usize], test: &[usize]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidInput("accuracy needs a non-empty test set".into()));
    }
    let correct = test.iter().filter(|&&i| pred[i] == truth[i]).count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_split, sbm_generate, SbmParams};

    fn tiny() -> (Graph, DenseMatrix, Vec<usize>, Vec<usize>) {
        let g = Graph::build(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)]).unwrap();
        let x = DenseMatrix::from_rows(&[
            [1.0, 0.0, 0.2],
            [0.9, 0.1, 0.0],
            [0.8, 0.3, 0.1],
            [0.1, 0.9, 0.0],
            [0.0, 1.0, 0.3],
            [0.2, 0.8, 0.1],
        ])
        .unwrap();
        (g, x, vec![0, 0, 0, 1, 1, 1], vec![0, 5])
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("gat".parse::<Method>().is_err());
        for m in Method::ALL {
            assert_eq!(m.with_filter(m.filter_kind()), m);
            assert!(m.with_filter(FilterKind::Ar).is_parametric());
        }
        assert_eq!(Method::Lp.with_filter(FilterKind::Rnm), Method::GlpRnm);
        assert_eq!(Method::IgcnAr.with_filter(FilterKind::None), Method::Gcn);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                epochs: 0,
                ..ok.clone()
            },
            TrainConfig { lr: 0.0, ..ok.clone() },
            TrainConfig {
                dropout: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                method: Method::IgcnRnm,
                filter_k: 0,
                ..ok.clone()
            },
            TrainConfig {
                method: Method::GlpAr,
                filter_alpha: -1.0,
                ..ok.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn one_epoch_is_one_adam_step() {
        let (g, x, labels, labeled) = tiny();
        let config = TrainConfig {
            epochs: 1,
            ..Default::default()
        };
        let model = train(&config, &g, &x, &labels, &labeled).unwrap();
        assert_eq!(model.optimizer().unwrap().steps(), 1);
        assert_eq!(model.loss_history.len(), 1);
    }

    #[test]
    fn missing_class_is_a_config_error_under_shoestring() {
        let (g, x, labels, _) = tiny();
        let config = TrainConfig {
            shoestring: true,
            ..Default::default()
        };
        let err = train(&config, &g, &x, &labels, &[0, 1]).unwrap_err();
        assert!(err.is_config(), "{err}");
        // The baseline trains fine on the same labels.
        assert!(train(
            &TrainConfig {
                epochs: 3,
                ..Default::default()
            },
            &g,
            &x,
            &labels,
            &[0, 1]
        )
        .is_ok());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let (g, _, labels, labeled) = tiny();
        let x = DenseMatrix::from_fn(6, 3, |i, j| if (i + j) % 2 == 0 { 1e150 } else { -1e150 });
        let config = TrainConfig {
            dropout: 0.0,
            lr: 1e200,
            ..Default::default()
        };
        match train(&config, &g, &x, &labels, &labeled) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_lambda_matches_baseline_bit_for_bit() {
        let (g, x, labels, labeled) = tiny();
        for method in Method::ALL {
            for layer in [EmbeddingLayer::Final, EmbeddingLayer::Hidden] {
                let base = TrainConfig {
                    method,
                    epochs: 20,
                    seed: 3,
                    embedding_layer: layer,
                    ..Default::default()
                };
                let shoe = TrainConfig {
                    shoestring: true,
                    lambda: 0.0,
                    ..base.clone()
                };
                let a = train(&base, &g, &x, &labels, &labeled).unwrap();
                let b = train(&shoe, &g, &x, &labels, &labeled).unwrap();
                assert_eq!(a.backbone, b.backbone, "{method} {layer}");
                assert_eq!(a.loss_history, b.loss_history);
            }
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let (g, x, labels, labeled) = tiny();
        let config = TrainConfig {
            shoestring: true,
            seed: 9,
            epochs: 30,
            ..Default::default()
        };
        let a = train(&config, &g, &x, &labels, &labeled).unwrap();
        let b = train(&config, &g, &x, &labels, &labeled).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            predict(&a, &g, &x, &labels, &labeled).unwrap(),
            predict(&b, &g, &x, &labels, &labeled).unwrap()
        );
    }

    #[test]
    fn single_node_single_class() {
        let g = Graph::build(1, &[]).unwrap();
        let x = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        for shoestring in [false, true] {
            for method in Method::ALL {
                let config = TrainConfig {
                    method,
                    shoestring,
                    epochs: 5,
                    ..Default::default()
                };
                let model = train(&config, &g, &x, &[0], &[0]).unwrap();
                assert_eq!(predict(&model, &g, &x, &[0], &[0]).unwrap(), vec![0]);
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let truth: Vec<usize> = (0..10).map(|i| i % 3).collect();
        let all: Vec<usize> = (0..10).collect();
        assert_eq!(evaluate(&truth, &truth, &all).unwrap(), 1.0);
        let wrong: Vec<usize> = truth.iter().map(|t| (t + 1) % 3).collect();
        assert_eq!(evaluate(&wrong, &truth, &all).unwrap(), 0.0);
        let half: Vec<usize> = (0..10).map(|i| if i < 5 { truth[i] } else { wrong[i] }).collect();
        assert_eq!(evaluate(&half, &truth, &all).unwrap(), 0.5);
        assert!(evaluate(&truth, &truth, &[]).is_err());
    }

    #[test]
    fn weight_decay_shrinks_parameters_without_data_gradient() {
        let (g, _, labels, labeled) = tiny();
        let x = DenseMatrix::zeros(6, 3);
        let mut previous = f64::INFINITY;
        for epochs in 1..=40 {
            let config = TrainConfig {
                epochs,
                decay_all_weights: true,
                seed: 2,
                ..Default::default()
            };
            let model = train(&config, &g, &x, &labels, &labeled).unwrap();
            let p = model.params().unwrap();
            let norm = (p.w0().frobenius_norm().powi(2) + p.w1().frobenius_norm().powi(2)).sqrt();
            assert!(norm <= previous, "epoch {epochs}: {norm} > {previous}");
            previous = norm;
        }
    }

    #[test]
    fn training_loss_decreases_on_sbm() {
        let data = sbm_generate(&SbmParams {
            n: 200,
            k: 2,
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 8,
            noise: 0.5,
            seed: 4,
        })
        .unwrap();
        let split = sample_split(&data, 1, 4).unwrap();
        for shoestring in [false, true] {
            let config = TrainConfig {
                shoestring,
                seed: 4,
                ..Default::default()
            };
            let model = train(&config, &data.graph, &data.features, &data.labels, &split.labeled).unwrap();
            let h = &model.loss_history;
            assert_eq!(h.len(), 200);
            assert!(h[199] < h[0], "{} !< {}", h[199], h[0]);
        }
    }

    #[test]
    fn shoestring_separates_two_block_sbm() {
        let data = sbm_generate(&SbmParams {
            n: 200,
            k: 2,
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 8,
            noise: 0.5,
            seed: 11,
        })
        .unwrap();
        let split = sample_split(&data, 1, 11).unwrap();
        let config = TrainConfig {
            shoestring: true,
            seed: 11,
            ..Default::default()
        };
        let model = train(&config, &data.graph, &data.features, &data.labels, &split.labeled).unwrap();
        let pred = predict(&model, &data.graph, &data.features, &data.labels, &split.labeled).unwrap();
        let acc = evaluate(&pred, &data.labels, &split.test).unwrap();
        assert!(acc >= 0.9, "accuracy {acc}");
    }

    #[test]
    fn baseline_predict_is_backbone_argmax() {
        let (g, x, labels, labeled) = tiny();
        let config = TrainConfig {
            epochs: 10,
            ..Default::default()
        };
        let model = train(&config, &g, &x, &labels, &labeled).unwrap();
        let params = model.params().unwrap();
        let cache = crate::gcn::gcn_forward(
            &Propagator::gcn(&g),
            &x,
            params,
            0.0,
            false,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(
            predict(&model, &g, &x, &labels, &labeled).unwrap(),
            cache.probs.row_argmax()
        );

        let lp = train(
            &TrainConfig {
                method: Method::Lp,
                ..Default::default()
            },
            &g,
            &x,
            &labels,
            &labeled,
        )
        .unwrap();
        let Backbone::Propagation { scores } = &lp.backbone else {
            panic!()
        };
        assert_eq!(predict(&lp, &g, &x, &labels, &labeled).unwrap(), lp_predict(scores));
    }
}
