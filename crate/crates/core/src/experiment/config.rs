//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments. Grid keys (`method`, `shoestring`,
//! `metric`, `labels_per_class`) take comma-separated lists. `lambda`,
//! `filter`, `filter_k` and `filter_alpha` accept `auto`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::data::SbmParams;
use crate::error::{Error, Result};
use crate::filters::{default_ar_alpha, default_rnm_k, FilterKind};
use crate::gcn::EmbeddingLayer;
use crate::metric_head::SimilarityKind;
use crate::trainer::{Method, TrainConfig};

/// Every recognized key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    (
        "dataset",
        "`sbm` for a generated block model, or a citation dataset name or directory",
    ),
    ("data_dir", "dataset root (default: $SHOESTRING_DATA_DIR, else ./data)"),
    ("row_normalize", "divide citation feature rows by their sum"),
    ("sbm_n", "block model: node count"),
    ("sbm_k", "block model: number of blocks"),
    ("sbm_p_in", "block model: edge probability within a block"),
    ("sbm_p_out", "block model: edge probability between blocks"),
    ("sbm_feature_dim", "block model: feature width"),
    ("sbm_noise", "block model: uniform feature noise amplitude"),
    ("sbm_seed", "block model: generator seed"),
    ("method", "backbones: gcn|igcn_rnm|igcn_ar|lp|glp_rnm|glp_ar"),
    ("shoestring", "metric head on or off: true|false, e.g. `false,true`"),
    ("metric", "similarities for the metric head: cos|l1|l2"),
    ("labels_per_class", "label budgets"),
    ("lambda", "metric loss weight, or auto"),
    ("filter", "override the filter of every method: none|rnm|ar|auto"),
    ("filter_k", "RNM exponent, or auto"),
    ("filter_alpha", "AR strength, or auto"),
    ("lp_alpha", "label propagation regularization weight"),
    ("lr", "Adam learning rate"),
    ("dropout", "hidden-layer dropout rate"),
    ("weight_decay", "L2 weight decay"),
    ("weight_decay_all", "decay both layers instead of the first only"),
    ("epochs", "training epochs"),
    ("hidden", "hidden units"),
    ("embedding_layer", "embedding read by the metric head: final|hidden"),
    (
        "stop_gradient_centroids",
        "treat class centroids as constants in the metric loss",
    ),
    (
        "normalized_laplacian",
        "use the normalized Laplacian for AR filtering and LP",
    ),
    ("seeds", "runs per grid cell; run i uses seed base_seed + i"),
    ("base_seed", "seed of the first run"),
    ("out_dir", "directory for results.csv and summary.json"),
    ("jobs", "runs executed in parallel"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub data_dir: Option<PathBuf>,
    pub row_normalize: bool,
    pub sbm: SbmParams,
    pub method: Vec<Method>,
    pub shoestring: Vec<bool>,
    pub metric: Vec<SimilarityKind>,
    pub labels_per_class: Vec<usize>,
    pub lambda: Option<f64>,
    pub filter: Option<FilterKind>,
    pub filter_k: Option<usize>,
    pub filter_alpha: Option<f64>,
    pub lp_alpha: f64,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub weight_decay_all: bool,
    pub epochs: usize,
    pub hidden: usize,
    pub embedding_layer: EmbeddingLayer,
    pub stop_gradient_centroids: bool,
    pub normalized_laplacian: bool,
    pub seeds: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            dataset: "sbm".into(),
            data_dir: None,
            row_normalize: true,
            sbm: SbmParams {
                n: 400,
                k: 4,
                p_in: 0.1,
                p_out: 0.01,
                feature_dim: 16,
                noise: 0.5,
                seed: 0,
            },
            method: vec![Method::Gcn],
            shoestring: vec![false, true],
            metric: vec![SimilarityKind::Cos],
            labels_per_class: vec![1],
            lambda: None,
            filter: None,
            filter_k: None,
            filter_alpha: None,
            lp_alpha: train.lp_alpha,
            lr: train.lr,
            dropout: train.dropout,
            weight_decay: train.weight_decay,
            weight_decay_all: train.decay_all_weights,
            epochs: train.epochs,
            hidden: train.hidden,
            embedding_layer: train.embedding_layer,
            stop_gradient_centroids: train.stop_gradient_centroids,
            normalized_laplacian: train.normalized_laplacian,
            seeds: 20,
            base_seed: 0,
            out_dir: PathBuf::from("results"),
            jobs: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("`{key}` needs at least one value")));
    }
    Ok(items)
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn auto<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl ExperimentConfig {
    /// Reads a config file and applies `overrides` on top, in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                Self::parse_str(&text)?
            }
            None => Self::default(),
        };
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(config)
    }

    /// Sets one key. Dashes in `key` are read as underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "dataset" => self.dataset = value.trim().to_string(),
            "data_dir" => self.data_dir = Some(PathBuf::from(value.trim())),
            "row_normalize" => self.row_normalize = parse(k, value)?,
            "sbm_n" => self.sbm.n = parse(k, value)?,
            "sbm_k" => self.sbm.k = parse(k, value)?,
            "sbm_p_in" => self.sbm.p_in = parse(k, value)?,
            "sbm_p_out" => self.sbm.p_out = parse(k, value)?,
            "sbm_feature_dim" => self.sbm.feature_dim = parse(k, value)?,
            "sbm_noise" => self.sbm.noise = parse(k, value)?,
            "sbm_seed" => self.sbm.seed = parse(k, value)?,
            "method" => self.method = parse_list(k, value)?,
            "shoestring" => self.shoestring = parse_list(k, value)?,
            "metric" => self.metric = parse_list(k, value)?,
            "labels_per_class" => self.labels_per_class = parse_list(k, value)?,
            "lambda" => self.lambda = parse_auto(k, value)?,
            "filter" => self.filter = parse_auto(k, value)?,
            "filter_k" => self.filter_k = parse_auto(k, value)?,
            "filter_alpha" => self.filter_alpha = parse_auto(k, value)?,
            "lp_alpha" => self.lp_alpha = parse(k, value)?,
            "lr" => self.lr = parse(k, value)?,
            "dropout" => self.dropout = parse(k, value)?,
            "weight_decay" => self.weight_decay = parse(k, value)?,
            "weight_decay_all" => self.weight_decay_all = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "hidden" => self.hidden = parse(k, value)?,
            "embedding_layer" => self.embedding_layer = parse(k, value)?,
            "stop_gradient_centroids" => self.stop_gradient_centroids = parse(k, value)?,
            "normalized_laplacian" => self.normalized_laplacian = parse(k, value)?,
            "seeds" => self.seeds = parse(k, value)?,
            "base_seed" => self.base_seed = parse(k, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "jobs" => self.jobs = parse(k, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// The value of `key` as it would appear in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "dataset" => self.dataset.clone(),
            "data_dir" => self
                .data_dir
                .as_ref()
                .map(|d| d.display().to_string())
                .unwrap_or_default(),
            "row_normalize" => self.row_normalize.to_string(),
            "sbm_n" => self.sbm.n.to_string(),
            "sbm_k" => self.sbm.k.to_string(),
            "sbm_p_in" => self.sbm.p_in.to_string(),
            "sbm_p_out" => self.sbm.p_out.to_string(),
            "sbm_feature_dim" => self.sbm.feature_dim.to_string(),
            "sbm_noise" => self.sbm.noise.to_string(),
            "sbm_seed" => self.sbm.seed.to_string(),
            "method" => join(&self.method),
            "shoestring" => join(&self.shoestring),
            "metric" => join(&self.metric),
            "labels_per_class" => join(&self.labels_per_class),
            "lambda" => auto(&self.lambda),
            "filter" => auto(&self.filter),
            "filter_k" => auto(&self.filter_k),
            "filter_alpha" => auto(&self.filter_alpha),
            "lp_alpha" => self.lp_alpha.to_string(),
            "lr" => self.lr.to_string(),
            "dropout" => self.dropout.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "weight_decay_all" => self.weight_decay_all.to_string(),
            "epochs" => self.epochs.to_string(),
            "hidden" => self.hidden.to_string(),
            "embedding_layer" => self.embedding_layer.to_string(),
            "stop_gradient_centroids" => self.stop_gradient_centroids.to_string(),
            "normalized_laplacian" => self.normalized_laplacian.to_string(),
            "seeds" => self.seeds.to_string(),
            "base_seed" => self.base_seed.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "jobs" => self.jobs.to_string(),
            _ => return None,
        })
    }

    /// Serializes every key; parsing the text gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            let value = self.get(key).expect("every listed key is readable");
            if *key == "data_dir" && value.is_empty() {
                continue;
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if self.is_sbm() {
            self.sbm.validate()?;
        }
        for cell in self.cells()? {
            cell.train.validate()?;
        }
        Ok(())
    }

    pub fn is_sbm(&self) -> bool {
        self.dataset.eq_ignore_ascii_case("sbm")
    }

    /// Seeds of the runs in every cell.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }

    /// The grid: methods × budgets × metric head settings. Baseline cells
    /// ignore the metric list and appear once.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells: Vec<Cell> = Vec::new();
        for &requested in &self.method {
            let method = match self.filter {
                Some(kind) => requested.with_filter(kind),
                None => requested,
            };
            for &budget in &self.labels_per_class {
                if budget == 0 {
                    return Err(Error::Config("labels_per_class must be >= 1".into()));
                }
                for &shoestring in &self.shoestring {
                    let metrics: Vec<Option<SimilarityKind>> = if shoestring {
                        self.metric.iter().copied().map(Some).collect()
                    } else {
                        vec![None]
                    };
                    for metric in metrics {
                        let cell = self.cell(method, shoestring, metric, budget);
                        if !cells.iter().any(|c| c.key() == cell.key()) {
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        Ok(cells)
    }

    fn cell(&self, method: Method, shoestring: bool, metric: Option<SimilarityKind>, budget: usize) -> Cell {
        let kind = metric.unwrap_or(SimilarityKind::Cos);
        let train = TrainConfig {
            method,
            shoestring,
            metric: kind,
            lambda: self.lambda.unwrap_or_else(|| kind.default_lambda()),
            lr: self.lr,
            dropout: self.dropout,
            weight_decay: self.weight_decay,
            decay_all_weights: self.weight_decay_all,
            epochs: self.epochs,
            hidden: self.hidden,
            filter_k: self.filter_k.unwrap_or_else(|| default_rnm_k(budget)),
            filter_alpha: self.filter_alpha.unwrap_or_else(|| default_ar_alpha(budget)),
            lp_alpha: self.lp_alpha,
            normalized_laplacian: self.normalized_laplacian,
            embedding_layer: self.embedding_layer,
            stop_gradient_centroids: self.stop_gradient_centroids,
            seed: 0,
        };
        let fingerprint = self.fingerprint(&train, metric, budget);
        Cell {
            method,
            shoestring,
            metric,
            labels_per_class: budget,
            train,
            fingerprint,
        }
    }

    /// Hash of every setting that can change a cell's numbers.
    fn fingerprint(&self, train: &TrainConfig, metric: Option<SimilarityKind>, budget: usize) -> String {
        const PER_CELL: &[&str] = &[
            "method",
            "shoestring",
            "metric",
            "labels_per_class",
            "lambda",
            "filter",
            "filter_k",
            "filter_alpha",
            "out_dir",
            "jobs",
            "data_dir",
        ];
        let mut text = String::new();
        for (key, _) in KEYS {
            if !PER_CELL.contains(key) {
                let _ = writeln!(text, "{key}={}", self.get(key).unwrap_or_default());
            }
        }
        let _ = writeln!(text, "method={}", train.method);
        let _ = writeln!(text, "shoestring={}", train.shoestring);
        let _ = writeln!(text, "metric={}", metric.map_or("none".to_string(), |m| m.to_string()));
        let _ = writeln!(text, "labels_per_class={budget}");
        let _ = writeln!(text, "lambda={}", train.lambda);
        let _ = writeln!(text, "filter_k={}", train.filter_k);
        let _ = writeln!(text, "filter_alpha={}", train.filter_alpha);
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One point of the grid; every seed of it shares these settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub shoestring: bool,
    /// `None` for baseline cells.
    pub metric: Option<SimilarityKind>,
    pub labels_per_class: usize,
    /// Resolved training settings; `seed` is filled in per run.
    pub train: TrainConfig,
    pub fingerprint: String,
}

impl Cell {
    fn key(&self) -> (Method, bool, Option<SimilarityKind>, usize) {
        (self.method, self.shoestring, self.metric, self.labels_per_class)
    }
}
