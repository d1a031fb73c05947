mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use run::{Options, Outcome, Pipeline};

/// Runs experiment scenarios for weighted ergodic averages of
/// Dunford-Schwartz semigroups on atomic measure spaces.
#[derive(Debug, Parser)]
#[command(name = "ergolab", version)]
struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Pipeline,
    /// Scenario file, or a directory whose `*.toml` files are all run.
    scenario: PathBuf,
    /// Output directory; each scenario writes to `<out>/<name>/`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the semigroup step `h`.
    #[arg(long)]
    step: Option<f64>,
    /// Worker threads; defaults to the rayon default.
    #[arg(long)]
    threads: Option<usize>,
    /// Count failing estimate-grade checks as failures.
    #[arg(long)]
    strict: bool,
}

fn scenario_files(path: &Path) -> Result<Vec<PathBuf>, String> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("{}: no .toml scenarios", path.display()));
    }
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = ergolab::par::init_threads(n) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let files = match scenario_files(&cli.scenario) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = Options { out: cli.out, seed: cli.seed, step: cli.step };
    let outcomes = ergolab::par::map(&files, |path| run::run_scenario(path, cli.command, &opts));

    let (mut config_errors, mut failures) = (0, 0);
    for outcome in &outcomes {
        match outcome {
            Outcome::ConfigError { source, message } => {
                config_errors += 1;
                eprintln!("error: {}: {message}", source.display());
            }
            Outcome::Completed(record) => {
                for v in &record.verdicts {
                    let status = if v.pass { "PASS" } else { "FAIL" };
                    let grade = match v.grade {
                        run::Grade::Exact => "",
                        run::Grade::Estimate => " (estimate)",
                    };
                    println!("{} {}/{} {status}{grade}: {}", record.scenario, v.pipeline, v.check, v.detail);
                }
                for note in &record.notes {
                    println!("{} note {note}", record.scenario);
                }
                failures += record.failures(cli.strict);
            }
        }
    }
    println!("{} scenario(s), {failures} failing check(s), {config_errors} error(s)", outcomes.len());
    if config_errors > 0 {
        ExitCode::from(2)
    } else if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
