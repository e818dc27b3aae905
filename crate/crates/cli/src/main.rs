use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quasitraj_cli::run::{self, RunError, OUTPUT_DIR_ENV};
use quasitraj_cli::{catalog, Scenario};
use rayon::prelude::*;

/// Quasiclassical trajectories of driven polynomial oscillators.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the master equation along each scenario's time grid.
    Solve {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Run a built-in example, or print its scenario file.
    Example {
        /// Example id, e.g. cubic-2.1. `list` prints all ids.
        id: String,
        #[arg(long)]
        emit_scenario: bool,
    },
    /// Split-step wave-packet averages only.
    Oracle { scenario: PathBuf },
    /// Stationary points of the discretized path integral.
    Pathint { scenario: PathBuf },
    /// Solver against oracle, with per-sample deviation.
    Compare { scenario: PathBuf },
}

fn output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)
}

fn solve(scenario: &Scenario, suffix: &str) -> Result<i32, RunError> {
    let report = run::run(scenario)?;
    let path = run::output_path(scenario, suffix, output_dir().as_deref());
    let (header, rows) = run::trajectory_rows(&report);
    run::write_rows(&path, &header, &rows)?;
    println!("{}: {} samples ({}) -> {}", scenario.label(), report.counts.total(), report.counts, path.display());
    if let Some(dev) = report.max_deviation() {
        println!("{}: max |lambda - oracle| = {dev:.6e}", scenario.label());
    }
    Ok(report.exit_code())
}

fn load(path: &Path) -> Result<Scenario, RunError> {
    Ok(Scenario::load(path)?)
}

fn dispatch(cmd: Command) -> Result<i32, RunError> {
    match cmd {
        Command::Solve { scenarios } => {
            let results: Vec<Result<i32, RunError>> =
                scenarios.par_iter().map(|p| load(p).and_then(|s| solve(&s, ""))).collect();
            let mut code = 0;
            for (p, r) in scenarios.iter().zip(results) {
                match r {
                    Ok(c) => code = code.max(c),
                    Err(e) => {
                        eprintln!("error: {}: {e}", p.display());
                        return Ok(1);
                    }
                }
            }
            Ok(code)
        }
        Command::Example { id, emit_scenario } => {
            if id == "list" {
                catalog::IDS.iter().for_each(|id| println!("{id}"));
                return Ok(0);
            }
            let scenario = catalog::example(&id)?;
            if emit_scenario {
                print!("{}", scenario.to_toml());
                Ok(0)
            } else {
                solve(&scenario, "")
            }
        }
        Command::Oracle { scenario } => {
            let s = load(&scenario)?;
            let o = run::run_oracle(&s)?;
            let path = run::output_path(&s, "oracle", output_dir().as_deref());
            let (header, rows) = run::oracle_rows(&o);
            run::write_rows(&path, &header, &rows)?;
            println!("{}: L = {}, M = {}, dt = {:e} -> {}", s.label(), o.half_width, o.points, o.dt, path.display());
            Ok(0)
        }
        Command::Pathint { scenario } => {
            let s = load(&scenario)?;
            let (header, rows) = run::pathint_rows(&s)?;
            let path = run::output_path(&s, "pathint", output_dir().as_deref());
            run::write_rows(&path, &header, &rows)?;
            println!("{}: {} rows -> {}", s.label(), rows.len(), path.display());
            Ok(0)
        }
        Command::Compare { scenario } => {
            let mut s = load(&scenario)?;
            s.oracle.enabled = true;
            solve(&s, "compare")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
