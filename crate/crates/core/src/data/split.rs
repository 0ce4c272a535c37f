use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Labeled and test node sets for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub labels_per_class: usize,
    pub seed: u64,
    /// Sorted ascending.
    pub labeled: Vec<usize>,
    /// Every node not in `labeled`, ascending.
    pub test: Vec<usize>,
}

/// Draws `labels_per_class` nodes of every class uniformly without
/// replacement; all other nodes form the test set.
pub fn sample_split(dataset: &Dataset, labels_per_class: usize, seed: u64) -> Result<SplitSpec> {
    if labels_per_class == 0 {
        return Err(Error::Config("labels_per_class must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_labeled = vec![false; dataset.node_count()];
    for (class, members) in dataset.class_members().iter().enumerate() {
        if members.len() < labels_per_class {
            return Err(Error::Config(format!(
                "class `{}` has {} nodes, fewer than {labels_per_class} labels per class",
                dataset.class_names[class],
                members.len()
            )));
        }
        for pick in rand::seq::index::sample(&mut rng, members.len(), labels_per_class) {
            is_labeled[members[pick]] = true;
        }
    }
    let (labeled, test) = (0..dataset.node_count()).partition(|&i| is_labeled[i]);
    Ok(SplitSpec {
        labels_per_class,
        seed,
        labeled,
        test,
    })
}
