use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Cell, ExperimentConfig};
use super::results::{mean, write_results_csv, ExperimentResult, RunFailure};
use crate::data::{data_root, load_citation_with, resolve_citation, sample_split, sbm_generate, Dataset};
use crate::error::{Error, Result};
use crate::trainer::{embeddings, evaluate, predict, train, TrainConfig};

/// Generates or loads the configured dataset.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    if config.is_sbm() {
        return sbm_generate(&config.sbm);
    }
    let root = data_root(config.data_dir.as_deref());
    let (content, cites) = resolve_citation(&config.dataset, &root)?;
    load_citation_with(&content, &cites, config.row_normalize)
}

/// Accuracy on the test split and wall-clock time of one seeded run.
pub fn run_once(dataset: &Dataset, train_config: &TrainConfig, labels_per_class: usize) -> Result<(f64, f64)> {
    let start = Instant::now();
    let split = sample_split(dataset, labels_per_class, train_config.seed)?;
    let model = train(
        train_config,
        &dataset.graph,
        &dataset.features,
        &dataset.labels,
        &split.labeled,
    )?;
    let pred = predict(
        &model,
        &dataset.graph,
        &dataset.features,
        &dataset.labels,
        &split.labeled,
    )?;
    let accuracy = evaluate(&pred, &dataset.labels, &split.test)?;
    Ok((accuracy, start.elapsed().as_secs_f64()))
}

/// Runs every cell for every seed. Failed runs are kept in
/// [`ExperimentResult::failures`]; they do not stop the grid.
pub fn execute_grid(config: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    let cells = config.cells()?;
    let seeds = config.seed_list();
    let runs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let execute = |&(c, seed): &(usize, u64)| {
        let cell = &cells[c];
        let train_config = TrainConfig {
            seed,
            ..cell.train.clone()
        };
        let outcome = run_once(dataset, &train_config, cell.labels_per_class);
        if let Err(e) = &outcome {
            log::warn!("run {} seed {seed} failed: {e}", cell.fingerprint);
        }
        outcome.map_err(|e| e.to_string())
    };
    let outcomes: Vec<_> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        pool.install(|| runs.par_iter().map(execute).collect())
    } else {
        runs.iter().map(execute).collect()
    };

    let mut results: Vec<ExperimentResult> = cells.iter().map(|cell| empty_result(&dataset.name, cell)).collect();
    for (&(c, seed), outcome) in runs.iter().zip(outcomes) {
        let r = &mut results[c];
        match outcome {
            Ok((accuracy, seconds)) => {
                r.seeds.push(seed);
                r.accuracies.push(accuracy);
                r.seconds.push(seconds);
            }
            Err(error) => r.failures.push(RunFailure { seed, error }),
        }
    }
    Ok(results)
}

fn empty_result(dataset: &str, cell: &Cell) -> ExperimentResult {
    ExperimentResult {
        dataset: dataset.to_string(),
        method: cell.method,
        shoestring: cell.shoestring,
        metric: cell.metric,
        labels_per_class: cell.labels_per_class,
        fingerprint: Some(cell.fingerprint.clone()),
        seeds: Vec::new(),
        accuracies: Vec::new(),
        seconds: Vec::new(),
        failures: Vec::new(),
    }
}

/// Metric-head cell minus its baseline cell, over the seeds both completed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDifference {
    pub baseline: usize,
    pub shoestring: usize,
    pub pairs: usize,
    pub mean_difference: f64,
}

pub fn paired_differences(results: &[ExperimentResult]) -> Vec<PairedDifference> {
    let mut out = Vec::new();
    for (si, shoe) in results.iter().enumerate().filter(|(_, r)| r.shoestring) {
        let Some(bi) = results.iter().position(|b| {
            !b.shoestring
                && b.dataset == shoe.dataset
                && b.method == shoe.method
                && b.labels_per_class == shoe.labels_per_class
        }) else {
            continue;
        };
        let base = &results[bi];
        let diffs: Vec<f64> = shoe
            .seeds
            .iter()
            .zip(&shoe.accuracies)
            .filter_map(|(seed, acc)| {
                let j = base.seeds.iter().position(|s| s == seed)?;
                Some(acc - base.accuracies[j])
            })
            .collect();
        if !diffs.is_empty() {
            out.push(PairedDifference {
                baseline: bi,
                shoestring: si,
                pairs: diffs.len(),
                mean_difference: mean(&diffs),
            });
        }
    }
    out
}

/// The aggregated JSON summary of a grid.
pub fn summary_json(config: &ExperimentConfig, results: &[ExperimentResult]) -> Value {
    let number = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let cells: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "fingerprint": r.fingerprint,
                "method": r.method.to_string(),
                "shoestring": r.shoestring,
                "metric": r.metric_name(),
                "labels_per_class": r.labels_per_class,
                "seeds": r.seeds,
                "accuracies": r.accuracies,
                "mean": number(r.mean()),
                "std": number(r.std()),
                "mean_seconds": number(r.mean_seconds()),
                "failures": r.failures.iter().map(|f| json!({"seed": f.seed, "error": f.error})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let paired: Vec<Value> = paired_differences(results)
        .iter()
        .map(|p| {
            let (b, s) = (&results[p.baseline], &results[p.shoestring]);
            json!({
                "method": s.method.to_string(),
                "metric": s.metric_name(),
                "labels_per_class": s.labels_per_class,
                "baseline_fingerprint": b.fingerprint,
                "shoestring_fingerprint": s.fingerprint,
                "pairs": p.pairs,
                "mean_difference": p.mean_difference,
            })
        })
        .collect();
    let failed: Vec<Value> = results
        .iter()
        .flat_map(|r| {
            r.failures
                .iter()
                .map(move |f| json!({"fingerprint": r.fingerprint, "seed": f.seed, "error": f.error}))
        })
        .collect();
    json!({
        "dataset": results.first().map(|r| r.dataset.clone()).unwrap_or_else(|| config.dataset.clone()),
        "config": config.to_text(),
        "runs": results.iter().map(|r| r.accuracies.len() + r.failures.len()).sum::<usize>(),
        "failed_runs": failed,
        "results": cells,
        "paired": paired,
    })
}

/// What [`run_grid`] produced.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub results: Vec<ExperimentResult>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

impl GridOutcome {
    pub fn failed_runs(&self) -> usize {
        self.results.iter().map(|r| r.failures.len()).sum()
    }
}

/// Loads the dataset, runs the grid and writes `results.csv` and
/// `summary.json` under `out_dir`.
pub fn run_grid(config: &ExperimentConfig) -> Result<GridOutcome> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let results = execute_grid(config, &dataset)?;
    let (csv_path, summary_path) = write_outputs(config, &results, &config.out_dir)?;
    Ok(GridOutcome {
        results,
        csv_path,
        summary_path,
    })
}

fn write_outputs(config: &ExperimentConfig, results: &[ExperimentResult], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("results.csv");
    write_results_csv(results, &csv_path)?;
    let summary_path = dir.join("summary.json");
    let text =
        serde_json::to_string_pretty(&summary_json(config, results)).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))?;
    Ok((csv_path, summary_path))
}

/// Trains the first cell of the grid with `base_seed` and writes every
/// node's embedding to `path`.
pub fn export_run(config: &ExperimentConfig, path: &Path) -> Result<usize> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let cell = config
        .cells()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("empty grid".into()))?;
    let train_config = TrainConfig {
        seed: config.base_seed,
        ..cell.train
    };
    let split = sample_split(&dataset, cell.labels_per_class, config.base_seed)?;
    let model = train(
        &train_config,
        &dataset.graph,
        &dataset.features,
        &dataset.labels,
        &split.labeled,
    )?;
    let z = embeddings(&model, &dataset.graph, &dataset.features)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    crate::data::export_embeddings(&z, &dataset.labels, path)?;
    Ok(z.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::read_results_csv;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        for (k, v) in [
            ("sbm_n", "60"),
            ("sbm_k", "3"),
            ("sbm_p_in", "0.3"),
            ("sbm_p_out", "0.02"),
            ("sbm_feature_dim", "6"),
            ("epochs", "15"),
            ("seeds", "3"),
        ] {
            c.set(k, v).unwrap();
        }
        c
    }

    #[test]
    fn one_cell_three_seeds() {
        let mut config = small();
        config.set("shoestring", "true").unwrap();
        let dir = tempfile::tempdir().unwrap();
        config.out_dir = dir.path().to_path_buf();
        let outcome = run_grid(&config).unwrap();
        assert_eq!(outcome.results.len(), 1);
        let text = std::fs::read_to_string(&outcome.csv_path).unwrap();
        assert_eq!(text.lines().count(), 1 + 3);
        let summary: Value = serde_json::from_str(&std::fs::read_to_string(&outcome.summary_path).unwrap()).unwrap();
        assert_eq!(summary["results"].as_array().unwrap().len(), 1);
        assert_eq!(outcome.failed_runs(), 0);
        let back = read_results_csv(&outcome.csv_path).unwrap();
        assert_eq!(back[0].accuracies, outcome.results[0].accuracies);
    }

    #[test]
    fn paired_grid_reports_difference() {
        let config = small();
        let data = load_dataset(&config).unwrap();
        let results = execute_grid(&config, &data).unwrap();
        let pairs = paired_differences(&results);
        assert_eq!(pairs.len(), 1);
        let oracle: f64 = (0..3)
            .map(|i| results[1].accuracies[i] - results[0].accuracies[i])
            .sum::<f64>()
            / 3.0;
        assert!((pairs[0].mean_difference - oracle).abs() < 1e-15);
        let summary = summary_json(&config, &results);
        assert_eq!(summary["paired"][0]["pairs"], 3);
    }

    #[test]
    fn reruns_and_parallel_runs_agree() {
        let mut config = small();
        config.set("method", "gcn,lp,glp_ar").unwrap();
        let data = load_dataset(&config).unwrap();
        let a = execute_grid(&config, &data).unwrap();
        config.jobs = 4;
        let b = execute_grid(&config, &data).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.accuracies, y.accuracies);
            assert_eq!(x.fingerprint, y.fingerprint);
        }
    }

    #[test]
    fn failures_are_recorded_and_the_grid_continues() {
        let mut config = small();
        // 20 per class leaves the test set empty, so those runs fail.
        config.set("labels_per_class", "1,20").unwrap();
        config.set("shoestring", "false").unwrap();
        let data = load_dataset(&config).unwrap();
        let results = execute_grid(&config, &data).unwrap();
        assert_eq!(results[0].accuracies.len(), 3);
        assert_eq!(results[1].failures.len(), 3);
        let summary = summary_json(&config, &results);
        assert_eq!(summary["failed_runs"].as_array().unwrap().len(), 3);
        assert_eq!(summary["failed_runs"][0]["fingerprint"], json!(results[1].fingerprint));
    }

    #[test]
    fn export_writes_one_row_per_node() {
        let mut config = small();
        config.set("embedding_layer", "hidden").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/z.csv");
        assert_eq!(export_run(&config, &path).unwrap(), 60);
        let table = crate::data::read_embeddings(&path).unwrap();
        assert_eq!(table.embeddings.shape(), (60, 16));
    }

    #[test]
    fn missing_dataset_is_a_config_error() {
        let mut config = small();
        config.set("dataset", "nowhere").unwrap();
        config.set("data_dir", "/nonexistent").unwrap();
        assert!(run_grid(&config).unwrap_err().is_config());
    }
}
