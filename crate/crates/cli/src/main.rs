use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tabu_design::campaign::{self, Overrides, Payload, Problem, RunConfig};
use tabu_design::fourbar::Pairing;
use tabu_design::hydraulic::PlantParams;
use tabu_design::Error;

/// Discrete tabu search for four-bar path synthesis and hydrostatic
/// transmission sizing.
#[derive(Parser)]
#[command(name = "tabu-design", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded multi-trial campaign and write its artifacts.
    Run {
        /// JSON run configuration; flags below override its values.
        config: Option<PathBuf>,
        #[arg(long)]
        problem: Option<Problem>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Objective evaluations per trial.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Precision points as an `x,y` CSV.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Plant parameter overrides as JSON.
        #[arg(long)]
        plant: Option<PathBuf>,
        #[arg(long)]
        pairing: Option<Pairing>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Classify a mechanism or check a transmission design against its bounds.
    Check { payload: PathBuf },
    /// Write the coupler path or the simulated trajectory of one design.
    Trace {
        payload: PathBuf,
        /// Path points (mechanism) or time step in seconds (transmission).
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        plant: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            campaign::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Run { config, problem, trials, seed, budget, out, target, plant, pairing, workers } => {
            let mut cfg = match config {
                Some(p) => RunConfig::from_file(p)?,
                None => RunConfig::default(),
            };
            cfg.apply(&Overrides { problem, trials, seed, budget, out, target, plant, pairing, workers });
            let report = campaign::run_campaign(&cfg)?;
            print!("{}", report.table());
            println!("output: {}", cfg.out.display());
            Ok(0)
        }
        Command::Check { payload } => {
            let r = campaign::check(&Payload::from_file(payload)?)?;
            println!("{}", r.message);
            Ok(if r.feasible { 0 } else { 1 })
        }
        Command::Trace { payload, resolution, plant, out } => {
            let payload = Payload::from_file(payload)?;
            let plant = match plant {
                Some(p) => PlantParams::from_json_file(p)?,
                None => PlantParams::default(),
            };
            let rows = campaign::trace(&payload, resolution, &plant, &out)?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(0)
        }
    }
}
