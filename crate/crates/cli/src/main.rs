use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use shoestring::data::{sbm_generate, write_citation};
use shoestring::experiment::{export_run, read_results_csv, report_table, run_grid, ExperimentConfig, KEYS};
use shoestring::Error;

const EXIT_RUN_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// `--config` plus one flag per config key; underscores may be written as dashes.
fn config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .short('c')
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("key = value config file; flags override it"),
    );
    KEYS.iter().fold(cmd, |cmd, (key, help)| {
        let mut arg = Arg::new(*key).long(*key).value_name("VALUE").help(*help);
        if key.contains('_') {
            arg = arg.visible_alias(key.replace('_', "-"));
        }
        cmd.arg(arg)
    })
}

fn cli() -> Command {
    Command::new("shoestring")
        .about("Graph semi-supervised learning experiments")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("quiet")
                .long("quiet")
                .short('q')
                .global(true)
                .action(ArgAction::SetTrue)
                .help("suppress warnings"),
        )
        .subcommand(config_args(
            Command::new("run").about("Run the method x metric x budget x seed grid"),
        ))
        .subcommand(
            Command::new("report").about("Print tables from a results CSV").arg(
                Arg::new("csv")
                    .required(true)
                    .value_name("RESULTS_CSV")
                    .value_parser(clap::value_parser!(PathBuf)),
            ),
        )
        .subcommand(config_args(
            Command::new("export-embeddings")
                .about("Train the first grid cell with base_seed and write node embeddings")
                .arg(
                    Arg::new("output")
                        .long("output")
                        .short('o')
                        .required(true)
                        .value_name("FILE")
                        .value_parser(clap::value_parser!(PathBuf)),
                ),
        ))
        .subcommand(config_args(
            Command::new("gen-sbm").about("Write a stochastic block model as <out_dir>/sbm.content and sbm.cites"),
        ))
}

fn load_config(m: &ArgMatches) -> Result<ExperimentConfig, Error> {
    let overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|(key, _)| m.get_one::<String>(key).map(|v| (key.to_string(), v.clone())))
        .collect();
    ExperimentConfig::load(m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides)
}

fn cmd_run(m: &ArgMatches) -> Result<ExitCode, Error> {
    let config = load_config(m)?;
    let outcome = run_grid(&config)?;
    print!("{}", report_table(&outcome.results));
    println!();
    println!("results: {}", outcome.csv_path.display());
    println!("summary: {}", outcome.summary_path.display());
    let failed = outcome.failed_runs();
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see {}", outcome.summary_path.display());
        return Ok(ExitCode::from(EXIT_RUN_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(path: &Path) -> Result<ExitCode, Error> {
    let results = read_results_csv(path)?;
    print!("{}", report_table(&results));
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(m: &ArgMatches) -> Result<ExitCode, Error> {
    let config = load_config(m)?;
    let output = m.get_one::<PathBuf>("output").expect("required");
    let rows = export_run(&config, output)?;
    println!("wrote {rows} embeddings to {}", output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_sbm(m: &ArgMatches) -> Result<ExitCode, Error> {
    let config = load_config(m)?;
    let dataset = sbm_generate(&config.sbm)?;
    let (content, cites) = write_citation(&dataset, &config.out_dir)?;
    println!(
        "wrote {} nodes and {} edges to {} and {}",
        dataset.node_count(),
        dataset.graph.edge_count(),
        content.display(),
        cites.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let level = if matches.get_flag("quiet") {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let outcome = match matches.subcommand() {
        Some(("run", m)) => cmd_run(m),
        Some(("report", m)) => cmd_report(m.get_one::<PathBuf>("csv").expect("required")),
        Some(("export-embeddings", m)) => cmd_export(m),
        Some(("gen-sbm", m)) => cmd_gen_sbm(m),
        _ => unreachable!("subcommand_required"),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUN_FAILED)
            }
        }
    }
}
