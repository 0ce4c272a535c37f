use std::path::Path;
use std::process::{Command, Output};

fn shoestring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shoestring"))
        .args(args)
        .env_remove("SHOESTRING_DATA_DIR")
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &[
    "--sbm_n",
    "60",
    "--sbm_k",
    "3",
    "--sbm_p_in",
    "0.3",
    "--sbm_p_out",
    "0.02",
    "--sbm_feature_dim",
    "6",
    "--epochs",
    "20",
    "--seeds",
    "3",
];

fn run_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    shoestring(&args)
}

fn accuracy_column(csv: &Path) -> Vec<String> {
    std::fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().to_string())
        .collect()
}

#[test]
fn run_writes_results_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--shoestring", "false,true", "--metric", "cos,l2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("gcn+cos") && stdout.contains("gcn+l2"), "{stdout}");

    let csv = dir.path().join("results.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "dataset,method,shoestring,metric,labels_per_class,seed,accuracy,seconds"
    );
    assert_eq!(text.lines().count(), 1 + 3 * 3);
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"mean_difference\""));

    let report = shoestring(&["report", csv.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0));
    let table = String::from_utf8(report.stdout).unwrap();
    assert!(table.starts_with("accuracy %"));
    assert!(table.contains("wall-clock seconds"));
}

#[test]
fn reruns_reproduce_accuracies() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(
        run_small(a.path(), &["--method", "igcn_ar,glp_rnm"]).status.code(),
        Some(0)
    );
    assert_eq!(
        run_small(b.path(), &["--method", "igcn_ar,glp_rnm", "--jobs", "3"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        accuracy_column(&a.path().join("results.csv")),
        accuracy_column(&b.path().join("results.csv"))
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &["--epochs", "0"][..],
        &["--method", "gat"],
        &["--dropout", "1.5"],
        &["--dataset", "missing", "--data_dir", "/nonexistent"],
    ] {
        let out = run_small(dir.path(), extra);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{extra:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(
        shoestring(&["run", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(shoestring(&["run", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn failed_runs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // 20 labels per class labels every node, leaving no test set.
    let out = run_small(dir.path(), &["--labels_per_class", "1,20", "--shoestring", "false"]);
    assert_eq!(out.status.code(), Some(1));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"failed_runs\""));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("results.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 3
    );
}

#[test]
fn config_file_and_generated_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sbm");
    let mut gen = vec!["gen-sbm", "--out-dir", data.to_str().unwrap()];
    gen.extend_from_slice(SMALL);
    let out = shoestring(&gen);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("sbm.content").is_file() && data.join("sbm.cites").is_file());

    let cfg = dir.path().join("grid.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# generated block model read back as a citation dataset\ndataset = {}\nrow_normalize = false\nmethod = gcn, lp\nshoestring = true\nepochs = 10\nseeds = 2\nout_dir = {}\n",
            data.display(),
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let out = shoestring(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    assert!(rows.lines().nth(1).unwrap().starts_with("sbm,gcn,true,cos,1,0,"));
}

#[test]
fn export_embeddings_writes_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    let mut args = vec!["export-embeddings", "-o", path.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let out = shoestring(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "node_index,label,z_1,z_2,z_3");
    assert_eq!(lines.count(), 60);
}

#[test]
fn data_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut gen = vec!["gen-sbm", "--out-dir", dir.path().to_str().unwrap()];
    gen.extend_from_slice(SMALL);
    assert_eq!(shoestring(&gen).status.code(), Some(0));
    let out_dir = dir.path().join("out");
    let mut args = vec![
        "run",
        "--dataset",
        "sbm_file",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--epochs",
        "5",
        "--seeds",
        "1",
    ];
    // `sbm` itself means "generate"; rename the files so they are looked up by name.
    std::fs::rename(dir.path().join("sbm.content"), dir.path().join("sbm_file.content")).unwrap();
    std::fs::rename(dir.path().join("sbm.cites"), dir.path().join("sbm_file.cites")).unwrap();
    args.push("--row_normalize");
    args.push("false");
    let out = Command::new(env!("CARGO_BIN_EXE_shoestring"))
        .args(&args)
        .env("SHOESTRING_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
