use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use pilotwave_cli::commands::{self, Options, Outcome};
use pilotwave_cli::output::{TOOL, VERSION};
use pilotwave_cli::scenario::ScenarioFile;
use pilotwave_cli::CliError;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "pilotwave",
    version,
    about = "Bohmian trajectory laboratory: fields, traces, hyperplane classification and ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid size (cells or points, depending on the command).
    #[arg(long)]
    grid: Option<usize>,
    /// Ensemble size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Suppress the run record and warnings on stdout/stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate ψ, j^μ, R, Q and m²_eff on a grid.
    Field {
        #[command(flatten)]
        common: Common,
        /// Single time slice (overrides the scenario's range).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Integrate trajectories from start points.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Start point as comma-separated coordinates; repeatable.
        #[arg(long = "start", value_parser = parse_point)]
        starts: Vec<Vec<f64>>,
        /// Curve-parameter span of relativistic traces.
        #[arg(long, allow_hyphen_values = true)]
        span: Option<f64>,
    },
    /// Label the t₁ hyperplane and emit the predicted detection density.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo ensemble against the exact or predicted density.
    Ensemble {
        #[command(flatten)]
        common: Common,
    },
    /// Channel measurement: Born frequencies, exclusivity and collapse checks.
    Measure {
        #[command(flatten)]
        common: Common,
    },
    /// Search for a prediction scenario and write it as a window scenario.
    SearchScenario {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Render result tables as SVG.
    Plot {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
        /// Result CSV files (trajectory, classification, histogram or field tables).
        inputs: Vec<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate {v:?}: {e}"))
        })
        .collect()
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

struct Run<'a> {
    command: &'a str,
    scenario: Option<(&'a Path, String)>,
    out: &'a Path,
    quiet: bool,
}

fn finish(run: Run, started: u128, outcome: Result<Outcome, CliError>) -> ExitCode {
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if !run.quiet {
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
    }
    let paths = match outcome.artifacts.write_all(run.out) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if !run.quiet {
        let record = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": run.command,
            "scenario": run.scenario.as_ref().map(|(p, _)| p.display().to_string()),
            "scenario_digest": run.scenario.as_ref().map(|(_, d)| d.clone()),
            "seed": outcome.seed,
            "parameters": outcome.parameters,
            "started_unix_ms": started,
            "finished_unix_ms": unix_ms(),
            "artifacts": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        println!("{record}");
    }
    ExitCode::SUCCESS
}

fn with_scenario(
    command: &str,
    common: &Common,
    options: Options,
    f: fn(&ScenarioFile, &Options) -> Result<Outcome, CliError>,
) -> ExitCode {
    let started = unix_ms();
    let scenario = match ScenarioFile::load(&common.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let options = Options {
        seed: common.seed,
        grid: common.grid,
        n: common.n,
        bins: common.bins,
        ..options
    };
    let run = Run {
        command,
        scenario: Some((&common.scenario, scenario.digest())),
        out: &common.out,
        quiet: common.quiet,
    };
    finish(run, started, f(&scenario, &options))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Field { common, t } => with_scenario(
            "field",
            &common,
            Options {
                t,
                ..Options::default()
            },
            commands::field,
        ),
        Command::Trace {
            common,
            starts,
            span,
        } => with_scenario(
            "trace",
            &common,
            Options {
                starts,
                span,
                ..Options::default()
            },
            commands::trace,
        ),
        Command::Classify { common } => {
            with_scenario("classify", &common, Options::default(), commands::classify)
        }
        Command::Ensemble { common } => {
            with_scenario("ensemble", &common, Options::default(), commands::ensemble)
        }
        Command::Measure { common } => {
            with_scenario("measure", &common, Options::default(), commands::measure)
        }
        Command::SearchScenario { out, seed, quiet } => {
            let started = unix_ms();
            let options = Options {
                seed,
                ..Options::default()
            };
            let run = Run {
                command: "search-scenario",
                scenario: None,
                out: &out,
                quiet,
            };
            finish(
                run,
                started,
                commands::search_scenario(&options).map(|(_, o)| o),
            )
        }
        Command::Plot { out, quiet, inputs } => {
            let started = unix_ms();
            let run = Run {
                command: "plot",
                scenario: None,
                out: &out,
                quiet,
            };
            finish(run, started, commands::plot(&inputs))
        }
    }
}
