//! Semi-supervised node classification on graphs with very few labels.
//!
//! Backbones (GCN, label propagation and their graph-filtered variants) can
//! be combined with a prototype metric head: class centroids of the labeled
//! embeddings, a similarity-softmax loss added to cross-entropy, and
//! nearest-prototype classification.
//!
//! ```
//! use shoestring::data::{sample_split, sbm_generate, SbmParams};
//! use shoestring::trainer::{evaluate, predict, train, TrainConfig};
//!
//! let data = sbm_generate(&SbmParams {
//!     n: 120, k: 3, p_in: 0.2, p_out: 0.01, feature_dim: 6, noise: 0.5, seed: 1,
//! })?;
//! let split = sample_split(&data, 1, 1)?;
//! let config = TrainConfig { shoestring: true, epochs: 50, ..Default::default() };
//! let model = train(&config, &data.graph, &data.features, &data.labels, &split.labeled)?;
//! let pred = predict(&model, &data.graph, &data.features, &data.labels, &split.labeled)?;
//! assert!(evaluate(&pred, &data.labels, &split.test)? > 0.5);
//! # Ok::<(), shoestring::Error>(())
//! ```

pub mod data;
mod error;
pub mod experiment;
pub mod filters;
pub mod gcn;
pub mod graph;
pub mod labelprop;
pub mod linalg;
pub mod metric_head;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::{DenseMatrix, SparseMatrix};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs-and-filters.md")]
    mod graphs_and_filters {}
    #[doc = include_str!("../../../book/src/gcn-backbone.md")]
    mod gcn_backbone {}
    #[doc = include_str!("../../../book/src/metric-head.md")]
    mod metric_head {}
    #[doc = include_str!("../../../book/src/label-propagation.md")]
    mod label_propagation {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
